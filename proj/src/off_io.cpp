#include "bubbledyn/off_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "bubbledyn/error.hpp"

namespace bubbledyn {
namespace {

class LineReader {
public:
  LineReader(std::istream& in, std::string name) : in_(in), name_(std::move(name)) {}

  /// Next non-empty, comment-stripped line.
  std::istringstream next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++number_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return std::istringstream(line);
    }
    fail("unexpected end of file");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError(name_ + ":" + std::to_string(number_) + ": " + what);
  }

private:
  std::istream& in_;
  std::string name_;
  int number_ = 0;
};

}  // namespace

shapes::CavityMesh read_off(std::istream& in, const std::string& source_name) {
  LineReader reader(in, source_name);
  auto line = reader.next();
  std::string header = line.str();
  if (header.find_first_not_of(" \t") != std::string::npos &&
      header.compare(header.find_first_not_of(" \t"), 3, "OFF") == 0) {
    header.erase(0, header.find("OFF") + 3);
    line = header.find_first_not_of(" \t\r") == std::string::npos ? reader.next()
                                                                   : std::istringstream(header);
  }
  long nv = -1, nf = -1;
  if (!(line >> nv >> nf) || nv < 4 || nf < 4) reader.fail("expected vertex and face counts");

  shapes::CavityMesh mesh;
  mesh.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    auto l = reader.next();
    Vec3 v;
    if (!(l >> v.x() >> v.y() >> v.z()) || !v.allFinite()) reader.fail("malformed vertex");
    mesh.vertices.push_back(v);
  }
  mesh.triangles.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    auto l = reader.next();
    int count = 0;
    std::array<int, 3> t{};
    if (!(l >> count) || count != 3) reader.fail("only triangular faces are supported");
    if (!(l >> t[0] >> t[1] >> t[2])) reader.fail("malformed face");
    for (int idx : t)
      if (idx < 0 || idx >= nv) reader.fail("face index out of range");
    mesh.triangles.push_back(t);
  }
  mesh.path = source_name;
  return mesh;
}

shapes::CavityMesh read_off_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open OFF file");
  return read_off(in, path);
}

void write_off(std::ostream& out, const shapes::CavityMesh& mesh) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

}  // namespace bubbledyn
