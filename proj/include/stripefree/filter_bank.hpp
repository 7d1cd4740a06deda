#pragma once

#include <string>
#include <vector>

#include "stripefree/grid.hpp"

namespace stripefree {

/// m filters psi_i with their weights alpha_i (alpha_i = 1 / sigma_i^2).
class FilterBank {
 public:
  struct Entry {
    ImageGrid psi;
    double alpha = 1.0;
  };

  FilterBank() = default;
  explicit FilterBank(std::vector<Entry> entries) : entries_(std::move(entries)) { validate(); }

  void add(ImageGrid psi, double alpha) {
    entries_.push_back({std::move(psi), alpha});
    validate();
  }

  std::size_t size() const { return entries_.size(); }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const Shape& shape() const { return entries_.front().psi.shape(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::vector<ImageGrid> filters() const {
    std::vector<ImageGrid> out;
    for (const auto& e : entries_) out.push_back(e.psi);
    return out;
  }
  std::vector<double> alphas() const {
    std::vector<double> out;
    for (const auto& e : entries_) out.push_back(e.alpha);
    return out;
  }

 private:
  void validate() const {
    if (entries_.empty()) throw InvalidArgument("filter bank is empty");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!(entries_[i].alpha > 0.0))
        throw InvalidArgument("filter " + std::to_string(i) + ": alpha must be > 0");
      require_same_shape(entries_[i].psi.shape(), entries_.front().psi.shape(), "filter bank");
    }
  }

  std::vector<Entry> entries_;
};

}  // namespace stripefree
