#include "csteer/field_io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace csteer {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'S', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("field file truncated");
  return value;
}

}  // namespace

void write_field_csv(std::ostream& os, const MultivectorField<double>& field) {
  const GridSpec& spec = field.spec();
  os << "# csteer-field v1\n# dims=" << spec.dims() << " extents=";
  for (int a = 0; a < spec.dims(); ++a) os << (a ? "," : "") << spec.extent(a);
  os << " spacing=" << std::setprecision(17);
  for (int a = 0; a < spec.dims(); ++a) os << (a ? "," : "") << spec.spacing(a);
  os << " channels=" << field.channels() << " p=" << field.signature().p()
     << " q=" << field.signature().q() << " blade_order=bitmask\n";
  for (int a = 0; a < spec.dims(); ++a) os << 'i' << a << ',';
  os << "channel";
  for (int b = 0; b < field.blades(); ++b) os << ",b" << b;
  os << '\n';
  std::vector<int> multi(spec.dims());
  for (int p = 0; p < field.points(); ++p) {
    spec.unravel(p, multi.data());
    for (int c = 0; c < field.channels(); ++c) {
      for (int a = 0; a < spec.dims(); ++a) os << multi[a] << ',';
      os << c;
      for (int b = 0; b < field.blades(); ++b) os << ',' << field.value(p, c)(b);
      os << '\n';
    }
  }
}

MultivectorField<double> read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# csteer-field v1", 0) != 0) {
    throw std::runtime_error("not a csteer field CSV (missing version line)");
  }
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
    throw std::runtime_error("field CSV header missing");
  }
  std::map<std::string, std::string> header;
  for (const auto& token : split(line.substr(2), ' ')) {
    const auto eq = token.find('=');
    if (eq != std::string::npos) header[token.substr(0, eq)] = token.substr(eq + 1);
  }
  for (const char* key : {"dims", "extents", "spacing", "channels", "p", "q"}) {
    if (!header.count(key)) throw std::runtime_error(std::string("field CSV header lacks ") + key);
  }
  std::vector<int> extents;
  std::vector<double> spacing;
  for (const auto& e : split(header["extents"], ',')) extents.push_back(std::stoi(e));
  for (const auto& s : split(header["spacing"], ',')) spacing.push_back(std::stod(s));
  if (static_cast<int>(extents.size()) != std::stoi(header["dims"])) {
    throw std::runtime_error("field CSV extents do not match dims");
  }
  MultivectorField<double> field(GridSpec(extents, spacing),
                                 Signature(std::stoi(header["p"]), std::stoi(header["q"])),
                                 std::stoi(header["channels"]));
  std::getline(is, line);  // column names
  const int dims = field.spec().dims();
  std::vector<int> multi(dims);
  long rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != dims + 1 + field.blades()) {
      throw std::runtime_error("field CSV row has wrong column count");
    }
    for (int a = 0; a < dims; ++a) multi[a] = std::stoi(cells[a]);
    const int c = std::stoi(cells[dims]);
    for (int a = 0; a < dims; ++a) {
      if (multi[a] < 0 || multi[a] >= field.spec().extent(a)) {
        throw std::runtime_error("field CSV index out of range");
      }
    }
    if (c < 0 || c >= field.channels()) throw std::runtime_error("field CSV channel out of range");
    const int p = field.spec().ravel(multi.data());
    for (int b = 0; b < field.blades(); ++b) field.value(p, c)(b) = std::stod(cells[dims + 1 + b]);
    ++rows;
  }
  if (rows != static_cast<long>(field.points()) * field.channels()) {
    throw std::runtime_error("field CSV has " + std::to_string(rows) + " rows, expected " +
                             std::to_string(static_cast<long>(field.points()) * field.channels()));
  }
  return field;
}

void write_field_binary(std::ostream& os, const MultivectorField<double>& field) {
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, field.spec().dims());
  for (int a = 0; a < field.spec().dims(); ++a) put<std::uint32_t>(os, field.spec().extent(a));
  for (int a = 0; a < field.spec().dims(); ++a) put<double>(os, field.spec().spacing(a));
  put<std::uint32_t>(os, field.channels());
  put<std::uint32_t>(os, field.signature().p());
  put<std::uint32_t>(os, field.signature().q());
  os.write(reinterpret_cast<const char*>(field.data().data()),
           static_cast<std::streamsize>(field.data().size() * sizeof(double)));
}

MultivectorField<double> read_field_binary(std::istream& is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("not a csteer binary field");
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported field version");
  const auto dims = get<std::uint32_t>(is);
  if (dims < 1 || dims > kMaxDim) throw std::runtime_error("binary field has bad dims");
  std::vector<int> extents(dims);
  std::vector<double> spacing(dims);
  for (auto& e : extents) e = static_cast<int>(get<std::uint32_t>(is));
  for (auto& s : spacing) s = get<double>(is);
  const int channels = static_cast<int>(get<std::uint32_t>(is));
  const int p = static_cast<int>(get<std::uint32_t>(is));
  const int q = static_cast<int>(get<std::uint32_t>(is));
  MultivectorField<double> field(GridSpec(extents, spacing), Signature(p, q), channels);
  is.read(reinterpret_cast<char*>(field.data().data()),
          static_cast<std::streamsize>(field.data().size() * sizeof(double)));
  if (!is) throw std::runtime_error("binary field truncated");
  return field;
}

namespace {
bool is_csv(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}
}  // namespace

void save_field(const std::string& path, const MultivectorField<double>& field) {
  std::ofstream os(path, is_csv(path) ? std::ios::out : std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  if (is_csv(path)) {
    write_field_csv(os, field);
  } else {
    write_field_binary(os, field);
  }
}

MultivectorField<double> load_field(const std::string& path) {
  std::ifstream is(path, is_csv(path) ? std::ios::in : std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return is_csv(path) ? read_field_csv(is) : read_field_binary(is);
}

}  // namespace csteer
