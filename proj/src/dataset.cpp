#include "rmis/dataset.hpp"

#include <sstream>

#include "rmis/binary_io.hpp"
#include "rmis/error.hpp"
#include "rmis/samplers.hpp"
#include "rmis/toy2d.hpp"

namespace rmis {

namespace {

constexpr std::string_view kMagic = "RMISDATA";

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

BitDataset encode_dataset(const Synthetic2DSpec& spec, RngStream& rng) {
  const std::size_t k = spec.codec.bits();
  BitDataset ds;
  ds.manifest = {{"source", "synthetic2d"},
                 {"generator", spec.name},
                 {"constants", toy_generator_constants(spec.name)},
                 {"n", std::to_string(spec.n)},
                 {"bits_per_coordinate", std::to_string(k)},
                 {"lo", fmt(spec.codec.lo())},
                 {"hi", fmt(spec.codec.hi())},
                 {"rounding", "half-away-from-zero"},
                 {"seed", std::to_string(rng.seed())},
                 {"stream", std::to_string(rng.stream_id())}};
  const auto points = sample_2d(spec.name, spec.n, rng);
  ds.bits = BitBatch(2 * k);
  BitVector row(2 * k);
  for (const auto& p : points) {
    spec.codec.encode_into(p.x, row, 0);
    spec.codec.encode_into(p.y, row, k);
    ds.bits.push_back(row);
  }
  return ds;
}

BitDataset gen_ising_data(const IsingEnergy& true_model, std::size_t n, std::size_t steps,
                          RngStream& rng) {
  if (true_model.is_learnable()) {
    throw ConfigError("Ising data must come from a fixed (true) model");
  }
  if (n == 0 || steps == 0) throw ConfigError("Ising data generation needs n > 0 and steps > 0");
  const std::size_t d = true_model.dim();
  GibbsConfig cfg;
  cfg.samples = n;
  cfg.chains = n;
  cfg.burn_in = (steps + d - 1) / d;
  cfg.thin = 1;
  BitDataset ds;
  ds.manifest = {{"source", "ising"},
                 {"side", std::to_string(true_model.side())},
                 {"sigma", fmt(true_model.sigma())},
                 {"encoding", to_string(true_model.encoding())},
                 {"n", std::to_string(n)},
                 {"steps", std::to_string(steps)},
                 {"sweeps", std::to_string(cfg.burn_in)},
                 {"seed", std::to_string(rng.seed())},
                 {"stream", std::to_string(rng.stream_id())}};
  ds.bits = gibbs_sample_set(true_model, cfg, rng);
  return ds;
}

void save_dataset(const std::string& path, const BitDataset& ds) {
  const std::size_t d = ds.bits.dim();
  const std::size_t n = ds.bits.rows();
  const std::size_t row_bytes = (d + 7) / 8;
  std::string out;
  out.reserve(32 + n * row_bytes);
  out.append(kMagic);
  io::put_u32(out, kDatasetVersion);
  io::put_u64(out, d);
  io::put_u64(out, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t b = 0; b < row_bytes; ++b) {
      unsigned char byte = 0;
      for (std::size_t j = 8 * b; j < std::min(d, 8 * b + 8); ++j) {
        if (ds.bits.get(r, j)) byte |= static_cast<unsigned char>(0x80u >> (j % 8));
      }
      out.push_back(char(byte));
    }
  }
  const std::string manifest = io::format_manifest(ds.manifest);
  io::put_u64(out, manifest.size());
  out.append(manifest);
  io::write_file_atomic(path, out);
}

BitDataset load_dataset(const std::string& path) {
  const std::string data = io::read_file(path);
  io::Reader in(data, "dataset " + path);
  if (in.bytes(kMagic.size()) != kMagic) throw FormatError(path + ": not a dataset file (bad magic)");
  const std::uint32_t version = in.u32();
  if (version != kDatasetVersion) {
    throw VersionError(path + ": unsupported dataset version " + std::to_string(version));
  }
  const std::uint64_t d = in.u64();
  const std::uint64_t n = in.u64();
  if (d == 0) throw FormatError(path + ": dataset has d = 0");
  const std::size_t row_bytes = (d + 7) / 8;
  if (n > in.remaining() / row_bytes) throw FormatError(path + ": truncated bit matrix");
  BitDataset ds;
  ds.bits = BitBatch(d, n);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = in.bytes(row_bytes);
    for (std::size_t j = 0; j < d; ++j) {
      if (std::uint8_t(row[j / 8]) & (0x80u >> (j % 8))) ds.bits.set(r, j, true);
    }
    // Padding bits must be zero.
    if (d % 8 != 0 && (std::uint8_t(row[row_bytes - 1]) & (0xffu >> (d % 8)))) {
      throw FormatError(path + ": non-zero padding bits in row " + std::to_string(r));
    }
  }
  const std::uint64_t mlen = in.u64();
  ds.manifest = io::parse_manifest(in.bytes(mlen));
  if (!in.at_end()) throw FormatError(path + ": trailing bytes after manifest");
  return ds;
}

}  // namespace rmis
