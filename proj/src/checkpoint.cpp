#include "rmis/checkpoint.hpp"

#include "rmis/binary_io.hpp"
#include "rmis/error.hpp"

namespace rmis {

namespace {

constexpr std::string_view kMagic = "RMISCKPT";
constexpr std::string_view kModelPrefix = "model.";
constexpr std::string_view kParamPrefix = "param/";

}  // namespace

const Tensor& CheckpointFile::array(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a.value;
  }
  throw FormatError("checkpoint has no array '" + name + "'");
}

bool CheckpointFile::has_array(const std::string& name) const noexcept {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

const std::string& CheckpointFile::value(const std::string& key) const {
  auto it = manifest.find(key);
  if (it == manifest.end()) throw FormatError("checkpoint manifest has no key '" + key + "'");
  return it->second;
}

void write_checkpoint_file(const std::string& path, const CheckpointFile& ckpt) {
  std::string out(kMagic);
  io::put_u32(out, kCheckpointVersion);
  const std::string manifest = io::format_manifest(ckpt.manifest);
  io::put_u64(out, manifest.size());
  out += manifest;
  io::put_u32(out, std::uint32_t(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    io::put_u32(out, std::uint32_t(a.name.size()));
    out += a.name;
    io::put_u32(out, std::uint32_t(a.value.rank()));
    for (std::size_t dim : a.value.shape()) io::put_u64(out, dim);
    for (double v : a.value.data()) io::put_f64(out, v);
  }
  io::write_file_atomic(path, out);
}

CheckpointFile read_checkpoint_file(const std::string& path) {
  const std::string data = io::read_file(path);
  io::Reader in(data, "checkpoint " + path);
  if (in.bytes(kMagic.size()) != kMagic) {
    throw FormatError(path + ": not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw VersionError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointFile ckpt;
  const std::uint64_t mlen = in.u64();
  ckpt.manifest = io::parse_manifest(in.bytes(mlen));
  const std::uint32_t count = in.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    CheckpointArray a;
    a.name = std::string(in.bytes(in.u32()));
    const std::uint32_t rank = in.u32();
    if (rank > 2) throw FormatError(path + ": array '" + a.name + "' has rank > 2");
    std::vector<std::size_t> shape(rank);
    std::size_t total = 1;
    for (auto& s : shape) {
      s = in.u64();
      total *= s;
    }
    if (total > in.remaining() / 8) throw FormatError(path + ": truncated array '" + a.name + "'");
    std::vector<double> values(total);
    for (auto& v : values) v = in.f64();
    a.value = Tensor(std::move(shape), std::move(values));
    ckpt.arrays.push_back(std::move(a));
  }
  if (!in.at_end()) throw FormatError(path + ": trailing bytes");
  return ckpt;
}

void put_model(CheckpointFile& ckpt, const EnergyModel& model) {
  for (const auto& [k, v] : model.describe()) ckpt.manifest[std::string(kModelPrefix) + k] = v;
  for (const auto& p : model.params()) {
    ckpt.arrays.push_back({std::string(kParamPrefix) + p.name, p.value});
  }
}

std::unique_ptr<EnergyModel> model_from_checkpoint(const CheckpointFile& ckpt) {
  std::map<std::string, std::string> desc;
  for (const auto& [k, v] : ckpt.manifest) {
    if (k.starts_with(kModelPrefix)) desc[k.substr(kModelPrefix.size())] = v;
  }
  if (desc.empty()) throw FormatError("checkpoint carries no model description");
  ParamSet params;
  for (const auto& a : ckpt.arrays) {
    if (a.name.starts_with(kParamPrefix)) params.add(a.name.substr(kParamPrefix.size()), a.value);
  }
  return make_model(desc, std::move(params));
}

std::unique_ptr<EnergyModel> load_model(const std::string& path) {
  return model_from_checkpoint(read_checkpoint_file(path));
}

}  // namespace rmis
