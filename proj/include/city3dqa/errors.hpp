#pragma once

#include <stdexcept>
#include <string>

namespace city3dqa {

// Input text/binary that does not follow a wire format.
struct ParseError : std::runtime_error {
  std::size_t line = 0;
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Structured document (JSON) missing or mistyping a field.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration: unknown class id, ratios that do not sum to 1, ...
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Value outside a documented domain (non-finite coordinate, bearing out of range).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Instance id observed with conflicting class ids during streaming.
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An instance reference that resolves to zero or several instances.
struct ReferenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Degenerate geometry, e.g. coincident centroids in the xy-plane.
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unknown template id or malformed template definition.
struct RegistryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A template slot left unbound at instantiation time.
struct InstantiationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace city3dqa
