#include "wta/data/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "wta/binary_io.hpp"
#include "wta/error.hpp"

namespace wta::data {

nn::Tensor2 Dataset::onehots() const {
  nn::Tensor2 out(count(), structure.total_categories());
  for (std::size_t i = 0; i < count(); ++i) write_onehot(structure, categories_of(i), out.row(i));
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out{structure, {}, x.gather_rows(rows)};
  out.categories.reserve(rows.size() * structure.factors());
  for (std::size_t r : rows) {
    auto c = categories_of(r);
    out.categories.insert(out.categories.end(), c.begin(), c.end());
  }
  return out;
}

Dataset make_dataset(const LatentStructure& structure, const EntanglementMap& map,
                     std::size_t count, nn::Rng& rng,
                     const std::optional<LatentStructure>& confounders) {
  const LatentStructure full =
      confounders ? structure.concat(*confounders) : structure;
  require(map.input_dim() == full.total_categories(),
          "entanglement input dim " + std::to_string(map.input_dim()) +
              " != latent length " + std::to_string(full.total_categories()));
  const std::size_t m = structure.factors(), mf = full.factors();
  Dataset ds{structure, std::vector<Category>(count * m), nn::Tensor2()};
  nn::Tensor2 z(count, full.total_categories());
  std::vector<Category> cats(mf);
  for (std::size_t i = 0; i < count; ++i) {
    sample_categories(full, rng, cats);
    std::copy(cats.begin(), cats.begin() + static_cast<std::ptrdiff_t>(m),
              ds.categories.begin() + static_cast<std::ptrdiff_t>(i * m));
    write_onehot(full, cats, z.row(i));
  }
  ds.x = map.apply(z);
  return ds;
}

Dataset dataset_from_categories(const LatentStructure& structure, const EntanglementMap& map,
                                std::vector<Category> categories) {
  require(categories.size() % structure.factors() == 0, "category array is ragged");
  Dataset ds{structure, std::move(categories), nn::Tensor2()};
  ds.x = map.apply(ds.onehots());
  return ds;
}

Dataset enumerate_dataset(const LatentStructure& structure, const EntanglementMap& map) {
  CodeMatrix code = enumerate_code_matrix(structure);
  Dataset ds{structure, std::move(code.categories), map.apply(code.rows)};
  return ds;
}

namespace {
constexpr std::uint64_t kMaxRows = 1ULL << 32;
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  io::BinaryWriter w(path);
  w.magic("WTADATA1");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(ds.structure.factors()));
  for (std::size_t c : ds.structure.counts()) w.u32(static_cast<std::uint32_t>(c));
  w.u64(ds.input_dim());
  w.u64(ds.count());
  w.f64s(ds.x.values());
  for (Category c : ds.categories) w.u16(c);
  w.close();
}

Dataset read_dataset(const std::filesystem::path& path) {
  io::BinaryReader r(path);
  r.expect_magic("WTADATA1");
  if (r.u32() != 1) fail(ErrorCode::io, "unsupported dataset version in " + path.string());
  const auto m = r.u32();
  r.check_count(m, 4096, "factor count");
  std::vector<std::size_t> counts(m);
  for (auto& c : counts) c = r.u32();
  LatentStructure s(std::move(counts));
  const auto d = r.u64();
  const auto n = r.u64();
  r.check_count(d, 1u << 24, "observation width");
  r.check_count(n, kMaxRows, "row count");
  r.check_count(n * d, 1ULL << 31, "observation block size");
  Dataset ds{s, std::vector<Category>(n * m), nn::Tensor2(n, d)};
  r.f64s(ds.x.values());
  for (auto& c : ds.categories) c = r.u16();
  for (std::size_t i = 0; i < ds.count(); ++i) {
    auto c = ds.categories_of(i);
    for (std::size_t k = 0; k < m; ++k)
      if (c[k] >= s.count(k)) fail(ErrorCode::io, "category out of range in " + path.string());
  }
  return ds;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open " + path.string());
  for (std::size_t k = 0; k < ds.structure.factors(); ++k) out << "z" << k << ',';
  for (std::size_t j = 0; j < ds.input_dim(); ++j)
    out << 'x' << j << (j + 1 < ds.input_dim() ? "," : "\n");
  char buf[32];
  for (std::size_t i = 0; i < ds.count(); ++i) {
    for (Category c : ds.categories_of(i)) out << c << ',';
    auto row = ds.x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", row[j]);
      out << buf << (j + 1 < row.size() ? "," : "\n");
    }
  }
  if (!out) fail(ErrorCode::io, "write failed on " + path.string());
}

}  // namespace wta::data
