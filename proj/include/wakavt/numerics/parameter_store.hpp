// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wakavt/numerics/autograd.hpp"
#include "wakavt/numerics/random.hpp"

namespace wakavt::numerics {

/// Which part of the variational objective a parameter belongs to.
enum class Partition {
  Theta,  // decoder side: embeddings, causal stacks, fusion, output layer
  PhiR,   // encoder / non-causal stack and recognition network
  PhiP,   // prior network
  Xi,     // bag-of-words predictors
};

std::string_view partition_name(Partition p);
Partition parse_partition(std::string_view name);

/**
 * Named parameters with a gradient slot each.
 *
 * Parameters are tape leaves, so ops see them as ordinary Vars and
 * backward() writes straight into the slots. Insertion order is preserved
 * and defines the checkpoint layout.
 */
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Partition partition;
    Var var;
  };

  Var add(const std::string& name, Tensor init, Partition partition);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Var& get(const std::string& name) const;
  Tensor& value(const std::string& name);
  const Tensor& grad(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t num_values() const;
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  double grad_norm() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Zeroes every gradient slot in `store`, then back-propagates `loss`.
/// Parameters unreachable from the loss end with exactly-zero gradients.
void backward(const Var& loss, ParameterStore& store);

// ---- initialisers ---------------------------------------------------------

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor uniform_tensor(Shape shape, double bound, Rng& rng);

// ---- checkpoint archive ---------------------------------------------------

/**
 * Self-describing archive: a text manifest followed by raw little-endian
 * IEEE-754 doubles.
 *
 *   WAKAVT-CHECKPOINT 1
 *   meta<TAB>key<TAB>value
 *   tensor<TAB>name<TAB>label<TAB>d0,d1,...<TAB>byte_offset
 *   payload<TAB>byte_count
 *   <binary payload>
 */
struct Checkpoint {
  struct Record {
    std::string name;
    std::string label;
    Tensor value;
  };
  std::map<std::string, std::string> meta;
  std::vector<Record> records;

  const Record* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Appends every parameter of `store` as a record labelled with its partition.
void export_parameters(const ParameterStore& store, Checkpoint& ckpt);
/// Overwrites the values of `store` from matching records; every parameter
/// must be present with an identical shape.
void import_parameters(const Checkpoint& ckpt, ParameterStore& store);

}  // namespace wakavt::numerics
