#pragma once

// Parameter checkpoint container.
//
// Text format, one record per line:
//
//   sgt-checkpoint 1
//   meta <key> <value...>            (any number, value runs to end of line)
//   param <name> <rank> <dim...>
//   <v0> <v1> ...                    (row-major, %.17g so doubles round-trip)
//   end
//
// Names are slash-separated parameter paths such as "layer0/graph/head1/query".

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sgt/tensor.hpp"

namespace sgt {

using NamedTensor = std::pair<std::string, Tensor>;

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> params;

  const Tensor& find(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

/// Copies values from `source` into the same-named tensors of `target`.
/// Every target name must exist in the checkpoint with an identical shape.
void assign_parameters(const std::vector<NamedTensor>& target, const Checkpoint& source);

}  // namespace sgt
