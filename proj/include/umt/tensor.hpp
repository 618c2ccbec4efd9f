// Copyright 2026 the umtbench authors
// SPDX-License-Identifier: Apache-2.0
//
// Named-tensor store for the encoder-decoder, adapters and embeddings, with
// per-tensor freeze masks. All math is 64-bit on CPU.

#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "umt/util.hpp"

namespace umt::model {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

class Parameters {
 public:
  Mat& add(const std::string& name, long rows, long cols) {
    require(index_.find(name) == index_.end(), "Parameters: duplicate tensor " + name);
    index_[name] = tensors_.size();
    names_.push_back(name);
    tensors_.push_back(Mat::Zero(rows, cols));
    return tensors_.back();
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Mat& at(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), "Parameters: unknown tensor " + name);
    return tensors_[it->second];
  }

  const Mat& at(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "Parameters: unknown tensor " + name);
    return tensors_[it->second];
  }

  // Creation order; stable across runs, drives deterministic initialization.
  const std::vector<std::string>& names() const { return names_; }

  void freeze(const std::string& name) {
    require(has(name), "freeze: unknown tensor " + name);
    frozen_.insert(name);
  }

  void unfreeze_all() { frozen_.clear(); }
  bool is_frozen(const std::string& name) const { return frozen_.count(name) > 0; }
  const std::set<std::string>& freeze_mask() const { return frozen_; }

  std::vector<std::string> trainable_names() const {
    std::vector<std::string> out;
    out.reserve(names_.size());
    for (const auto& n : names_) {
      if (!is_frozen(n)) out.push_back(n);
    }
    return out;
  }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& t : tensors_) n += static_cast<size_t>(t.size());
    return n;
  }

  std::string content_hash() const {
    Fnv1a h;
    for (size_t i = 0; i < names_.size(); ++i) {
      h.update(names_[i]);
      const Mat& t = tensors_[i];
      h.update(std::string_view(reinterpret_cast<const char*>(t.data()),
                                static_cast<size_t>(t.size()) * sizeof(double)));
    }
    return h.hex();
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<Mat> tensors_;
  std::set<std::string> frozen_;
};

// One zero tensor per trainable parameter. Frozen tensors never appear.
class Gradients {
 public:
  Gradients() = default;

  explicit Gradients(const Parameters& params) {
    for (const auto& n : params.trainable_names()) {
      const Mat& t = params.at(n);
      index_[n] = tensors_.size();
      names_.push_back(n);
      tensors_.push_back(Mat::Zero(t.rows(), t.cols()));
    }
  }

  // nullptr when the tensor is frozen or unknown: accumulation sites use
  // this to skip weight gradients while still propagating activations.
  Mat* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &tensors_[it->second];
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const Mat& at(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "Gradients: unknown tensor " + name);
    return tensors_[it->second];
  }

  const std::vector<std::string>& names() const { return names_; }

  void add(const Gradients& other) {
    require(names_ == other.names_, "Gradients::add: shape mismatch");
    for (size_t i = 0; i < tensors_.size(); ++i) tensors_[i] += other.tensors_[i];
  }

  void scale(double s) {
    for (auto& t : tensors_) t *= s;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<Mat> tensors_;
};

}  // namespace umt::model
