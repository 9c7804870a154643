#pragma once

#include <iosfwd>
#include <string>

#include "bubbledyn/shapes.hpp"

namespace bubbledyn {

/// Reads an ASCII OFF triangle mesh: optional "OFF" keyword, a counts line
/// (vertices, faces[, edges]), vertex lines, then faces given as "3 i j k".
/// '#' starts a comment. Throws ValidationError with the offending line.
shapes::CavityMesh read_off(std::istream& in, const std::string& source_name);
shapes::CavityMesh read_off_file(const std::string& path);

void write_off(std::ostream& out, const shapes::CavityMesh& mesh);

}  // namespace bubbledyn
