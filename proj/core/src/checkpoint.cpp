#include "sgt/checkpoint.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sgt/error.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "tensor_engine";
constexpr const char* kMagic = "sgt-checkpoint";

[[noreturn]] void bad(const std::string& message) { throw Error(kModule, "checkpoint: " + message); }

}  // namespace

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : params)
    if (n == name) return t;
  bad(fmt::format("no parameter named '{}'", name));
}

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  out << kMagic << " 1\n";
  for (const auto& [key, value] : checkpoint.meta) {
    if (key.find_first_of(" \t\n") != std::string::npos || value.find('\n') != std::string::npos) {
      bad(fmt::format("metadata key '{}' or its value contains whitespace/newline", key));
    }
    out << "meta " << key << ' ' << value << '\n';
  }
  for (const auto& [name, tensor] : checkpoint.params) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      bad(fmt::format("invalid parameter name '{}'", name));
    }
    out << "param " << name << ' ' << tensor.rank();
    for (auto d : tensor.shape()) out << ' ' << d;
    out << '\n';
    std::string line;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      if (i) line.push_back(' ');
      line += fmt::format("{:.17g}", tensor.data()[i]);
    }
    out << line << '\n';
  }
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint ck;
  std::string line;
  if (!std::getline(in, line) || line != fmt::format("{} 1", kMagic)) bad("missing or unsupported header");
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (kind == "param") {
      std::string name;
      std::size_t rank = 0;
      if (!(ls >> name >> rank) || rank == 0) bad(fmt::format("malformed param line '{}'", line));
      Shape shape(rank);
      for (auto& d : shape)
        if (!(ls >> d) || d == 0) bad(fmt::format("malformed shape for '{}'", name));
      std::string values;
      if (!std::getline(in, values)) bad(fmt::format("missing values for '{}'", name));
      std::vector<double> data;
      data.reserve(shape_size(shape));
      const char* p = values.c_str();
      char* end = nullptr;
      while (true) {
        while (*p == ' ') ++p;
        if (*p == '\0') break;
        const double v = std::strtod(p, &end);
        if (end == p) bad(fmt::format("unparseable value in '{}'", name));
        data.push_back(v);
        p = end;
      }
      if (data.size() != shape_size(shape)) {
        bad(fmt::format("'{}' has {} values, shape {} needs {}", name, data.size(), shape_string(shape),
                        shape_size(shape)));
      }
      ck.params.emplace_back(name, Tensor::from(std::move(shape), std::move(data)));
    } else if (!kind.empty()) {
      bad(fmt::format("unknown record '{}'", kind));
    }
  }
  if (!ended) bad("truncated file (no end marker)");
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(kModule, fmt::format("cannot write checkpoint '{}'", path));
  write_checkpoint(out, checkpoint);
  if (!out) throw Error(kModule, fmt::format("write failed for '{}'", path));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(kModule, fmt::format("cannot open checkpoint '{}'", path));
  return read_checkpoint(in);
}

void assign_parameters(const std::vector<NamedTensor>& target, const Checkpoint& source) {
  for (const auto& [name, tensor] : target) {
    const auto& src = source.find(name);
    if (src.shape() != tensor.shape()) {
      bad(fmt::format("shape mismatch for '{}': checkpoint {} vs model {}", name, shape_string(src.shape()),
                      shape_string(tensor.shape())));
    }
    auto dst = tensor;
    std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
  }
}

}  // namespace sgt
