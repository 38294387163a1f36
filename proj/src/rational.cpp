#include "pomap/rational.hpp"
#include "pomap/error.hpp"

#include <array>
#include <charconv>
#include <cctype>

namespace pomap {

const char* to_string(ErrorCode code)
{
   switch (code) {
      case ErrorCode::dimension_mismatch: return "dimension_mismatch";
      case ErrorCode::invalid_model: return "invalid_model";
      case ErrorCode::invalid_argument: return "invalid_argument";
      case ErrorCode::cyclic_graph: return "cyclic_graph";
      case ErrorCode::coverage_violation: return "coverage_violation";
      case ErrorCode::not_a_grid: return "not_a_grid";
      case ErrorCode::no_match: return "no_match";
      case ErrorCode::cap_exceeded: return "cap_exceeded";
      case ErrorCode::rejection_limit: return "rejection_limit";
      case ErrorCode::parse_error: return "parse_error";
      case ErrorCode::io_error: return "io_error";
      case ErrorCode::internal: return "internal";
   }
   return "unknown";
}

namespace {

Rational parse_decimal(std::string_view text)
{
   std::size_t pos = 0;
   bool negative = false;
   if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      negative = text[pos] == '-';
      ++pos;
   }
   std::string digits;
   long exponent = 0;
   bool seen_digit = false;
   bool seen_point = false;
   for (; pos < text.size(); ++pos) {
      const char c = text[pos];
      if (std::isdigit(static_cast<unsigned char>(c))) {
         digits.push_back(c);
         seen_digit = true;
         if (seen_point) --exponent;
      } else if (c == '.' && !seen_point) {
         seen_point = true;
      } else {
         break;
      }
   }
   if (!seen_digit) throw Error(ErrorCode::parse_error, "not a number: '" + std::string(text) + "'");
   if (pos < text.size()) {
      if (text[pos] != 'e' && text[pos] != 'E')
         throw Error(ErrorCode::parse_error, "trailing characters in number: '" + std::string(text) + "'");
      ++pos;
      long e = 0;
      const char* first = text.data() + pos;
      if (pos < text.size() && text[pos] == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), e);
      if (ec != std::errc() || ptr != text.data() + text.size())
         throw Error(ErrorCode::parse_error, "bad exponent in number: '" + std::string(text) + "'");
      exponent += e;
   }
   mpz_class numerator(digits, 10);
   mpz_class scale;
   mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
   Rational result;
   if (exponent >= 0)
      result = Rational(numerator * scale);
   else
      result = Rational(numerator, scale);
   result.canonicalize();
   return negative ? Rational(-result) : result;
}

} // namespace

Rational parse_rational(std::string_view text)
{
   while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
   while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
   const auto slash = text.find('/');
   if (slash == std::string_view::npos) return parse_decimal(text);
   const Rational p = parse_decimal(text.substr(0, slash));
   const Rational q = parse_decimal(text.substr(slash + 1));
   if (q == 0) throw Error(ErrorCode::parse_error, "zero denominator: '" + std::string(text) + "'");
   return Rational(p / q);
}

Rational decimal_rational(double value)
{
   if (!std::isfinite(value)) throw Error(ErrorCode::invalid_argument, "non-finite value has no rational view");
   std::array<char, 64> buffer{};
   auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
   if (ec != std::errc()) throw Error(ErrorCode::internal, "to_chars failed");
   return parse_decimal(std::string_view(buffer.data(), static_cast<std::size_t>(ptr - buffer.data())));
}

std::string to_string(const Rational& value)
{
   if (value.get_den() == 1) return value.get_num().get_str();
   return value.get_num().get_str() + "/" + value.get_den().get_str();
}

} // namespace pomap
