#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rmis/energy.hpp"
#include "rmis/tensor.hpp"

namespace rmis {

struct CheckpointArray {
  std::string name;
  Tensor value;
};

// File layout (little-endian):
//   "RMISCKPT" | u32 version | u64 manifest length | manifest text
//   u32 array count, then per array:
//     u32 name length | name | u32 rank | u64 dims[rank] | f64 data[prod(dims)]
struct CheckpointFile {
  std::map<std::string, std::string> manifest;
  std::vector<CheckpointArray> arrays;

  // Throws FormatError when absent.
  const Tensor& array(const std::string& name) const;
  bool has_array(const std::string& name) const noexcept;
  const std::string& value(const std::string& key) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint_file(const std::string& path, const CheckpointFile& ckpt);
CheckpointFile read_checkpoint_file(const std::string& path);

// Model description is stored under "model.<key>", parameters as "param/<name>".
void put_model(CheckpointFile& ckpt, const EnergyModel& model);
std::unique_ptr<EnergyModel> model_from_checkpoint(const CheckpointFile& ckpt);
std::unique_ptr<EnergyModel> load_model(const std::string& path);

}  // namespace rmis
