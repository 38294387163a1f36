#pragma once

#include <stdexcept>
#include <string>

namespace pomap {

enum class ErrorCode {
   dimension_mismatch,
   invalid_model,
   invalid_argument,
   cyclic_graph,
   coverage_violation,
   not_a_grid,
   no_match,
   cap_exceeded,
   rejection_limit,
   parse_error,
   io_error,
   internal
};

const char* to_string(ErrorCode code);

// All library failures surface as this exception. `stage` is filled in by the
// pipeline so a failure can be traced to generate / lp / decompose / dual / check.
class Error : public std::runtime_error {
public:
   Error(ErrorCode code, const std::string& what, std::string stage = {})
      : std::runtime_error(what), code_(code), stage_(std::move(stage)) {}

   ErrorCode code() const noexcept { return code_; }
   const std::string& stage() const noexcept { return stage_; }

   Error with_stage(std::string stage) const { return Error(code_, what(), std::move(stage)); }

private:
   ErrorCode code_;
   std::string stage_;
};

} // namespace pomap
