#include "urlearn/error.hpp"

namespace urlearn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::structural: return "structural";
    case ErrorKind::lookup: return "lookup";
    case ErrorKind::degeneracy: return "degeneracy";
  }
  return "unknown";
}

}  // namespace urlearn
