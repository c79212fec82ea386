#include "repsim/json_out.hpp"

#include <charconv>
#include <cmath>

namespace repsim::cli {

namespace {

void write(const nlohmann::ordered_json& j, std::string& out) {
  using value_t = nlohmann::ordered_json::value_t;
  switch (j.type()) {
    case value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += nlohmann::ordered_json(key).dump();
        out += ':';
        write(value, out);
      }
      out += '}';
      return;
    }
    case value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += ',';
        first = false;
        write(value, out);
      }
      out += ']';
      return;
    }
    case value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      // strings, integers, booleans and null already have a unique spelling
      out += j.dump();
      return;
  }
}

}  // namespace

std::string format_double(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[32];
  // Plain format spells large integral values with every exact digit; the
  // scientific form keeps only the digits needed to round-trip.
  const auto result = std::abs(value) >= 1e16
                          ? std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific)
                          : std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string dump_json(const nlohmann::ordered_json& j) {
  std::string out;
  write(j, out);
  return out;
}

}  // namespace repsim::cli
