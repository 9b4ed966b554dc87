// Copyright 2026 The simorch Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SIMORCH_NAMING_HPP_
#define SIMORCH_NAMING_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "simorch/client.hpp"
#include "simorch/tensor.hpp"

namespace simorch {

/// Replaces every `{{ name }}` token (inner spaces optional) with its
/// binding. Nothing else is interpreted. Throws UNBOUND_PLACEHOLDER naming
/// the first variable without a binding.
std::string render(const std::string& tmpl,
                   const std::map<std::string, std::string>& bindings);

/// Per-publisher key templates. Full tensor key is
/// "{" + rendered dataset template + "}." + rendered field template.
struct NamingConvention {
  std::string dataset_template;
  std::string field_template;

  /// "<publisher>_time_index_{{ time_index }}_mpi_rank_{{ mpi_rank }}" and
  /// "field_name_{{ name }}_patch_{{ patch }}".
  static NamingConvention defaults_for(const std::string& publisher);

  std::string dataset_name(std::size_t time_index, std::size_t rank) const;
  std::string field_name(const std::string& field, const std::string& patch) const;
  std::string full_key(std::size_t time_index, std::size_t rank, const std::string& field,
                       const std::string& patch) const;
};

inline constexpr const char* kInternalPatch = "internal";

/// One field restricted to one patch; values are [n, components], n >= 1.
struct FieldBlock {
  std::string field_name;
  std::string patch_name;
  Tensor values;

  /// Returns nullopt for an empty patch so callers never build a zero-sized
  /// block. `flat` is row-major [n, components].
  static std::optional<FieldBlock> make(std::string field, std::string patch,
                                        std::vector<double> flat, std::size_t components);
};

/// Publishes simulation fields under a naming convention, in three layers:
/// send_fields (service) -> pack_fields (developer) -> send_list (generic).
class FieldPublisher {
 public:
  FieldPublisher(Client& client, std::string publisher_name,
                 std::optional<NamingConvention> naming = std::nullopt);

  const std::string& name() const { return name_; }
  const NamingConvention& naming() const { return naming_; }
  std::string metadata_key() const { return name_ + "_metadata"; }

  /// Writes "<publisher>_metadata" with meta strings "dataset" and "field".
  void publish_metadata();

  /// Service layer: one dataset per (time_index, rank) with one tensor per
  /// block. Returns the dataset name.
  std::string send_fields(std::size_t time_index, std::size_t rank,
                          const std::vector<FieldBlock>& blocks);

  /// Developer layer: names every block with the field template.
  std::vector<std::pair<std::string, Tensor>> pack_fields(
      const std::vector<FieldBlock>& blocks) const;

  /// Generic layer: stores a list of named tensors as one dataset.
  void send_list(const std::string& dataset_name,
                 const std::vector<std::pair<std::string, Tensor>>& named);

 private:
  Client& client_;
  std::string name_;
  NamingConvention naming_;
};

/// Consumer side: recovers key names from a publisher's metadata dataset
/// without any other knowledge of the producer.
class FieldResolver {
 public:
  /// Polls for "<publisher>_metadata" then reads its templates. Throws
  /// TIMEOUT if the metadata never appears.
  static FieldResolver from_store(Client& client, const std::string& publisher,
                                  const PollSpec& spec = {std::chrono::milliseconds(10), 1000});

  explicit FieldResolver(NamingConvention naming) : naming_(std::move(naming)) {}

  std::string dataset_name(std::size_t time_index, std::size_t rank) const {
    return naming_.dataset_name(time_index, rank);
  }
  std::string field_key(const std::string& field, std::size_t rank, std::size_t time_index,
                        const std::string& patch = kInternalPatch) const {
    return naming_.full_key(time_index, rank, field, patch);
  }
  const NamingConvention& naming() const { return naming_; }

 private:
  NamingConvention naming_;
};

}  // namespace simorch

#endif  // SIMORCH_NAMING_HPP_
