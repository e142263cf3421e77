#include "wta/data/latent.hpp"

#include <limits>
#include <string>

#include "wta/error.hpp"

namespace wta::data {

LatentStructure::LatentStructure(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
  require(!counts_.empty(), "latent structure needs at least one factor");
  combinations_ = 1;
  for (std::size_t c : counts_) {
    require(c >= 2, "every latent factor needs at least 2 categories");
    require(c <= std::numeric_limits<Category>::max(), "latent factor has too many categories");
    offsets_.push_back(total_);
    total_ += c;
    if (combinations_ > std::numeric_limits<std::uint64_t>::max() / c)
      combinations_ = std::numeric_limits<std::uint64_t>::max();
    else
      combinations_ *= c;
  }
}

std::size_t LatentStructure::factor_of_column(std::size_t column) const {
  require(column < total_, "column outside the latent vector");
  std::size_t k = 0;
  while (k + 1 < counts_.size() && offsets_[k + 1] <= column) ++k;
  return k;
}

bool LatentStructure::uniform() const noexcept {
  for (std::size_t c : counts_)
    if (c != counts_.front()) return false;
  return true;
}

LatentStructure LatentStructure::concat(const LatentStructure& other) const {
  if (other.empty()) return *this;
  if (empty()) return other;
  std::vector<std::size_t> all = counts_;
  all.insert(all.end(), other.counts_.begin(), other.counts_.end());
  return LatentStructure(std::move(all));
}

void write_onehot(const LatentStructure& s, std::span<const Category> categories,
                  std::span<double> out) {
  require(categories.size() == s.factors(), "category vector length mismatch");
  require(out.size() == s.total_categories(), "one-hot buffer length mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < s.factors(); ++k) {
    require(categories[k] < s.count(k), "category index out of range for factor " +
                                            std::to_string(k));
    out[s.offset(k) + categories[k]] = 1.0;
  }
}

LatentSample make_sample(const LatentStructure& s, std::span<const Category> categories) {
  LatentSample out{std::vector<Category>(categories.begin(), categories.end()),
                   std::vector<double>(s.total_categories())};
  write_onehot(s, categories, out.onehot);
  return out;
}

bool is_valid_onehot(const LatentStructure& s, std::span<const double> onehot) {
  if (onehot.size() != s.total_categories()) return false;
  for (std::size_t k = 0; k < s.factors(); ++k) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < s.count(k); ++j) {
      const double v = onehot[s.offset(k) + j];
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

void sample_categories(const LatentStructure& s, nn::Rng& rng, std::span<Category> out) {
  require(out.size() == s.factors(), "category buffer length mismatch");
  for (std::size_t k = 0; k < s.factors(); ++k)
    out[k] = static_cast<Category>(rng.below(s.count(k)));
}

LatentSample sample_latent(const LatentStructure& s, nn::Rng& rng) {
  std::vector<Category> cats(s.factors());
  sample_categories(s, rng, cats);
  return make_sample(s, cats);
}

std::vector<Category> categories_at(const LatentStructure& s, std::uint64_t index) {
  require(index < s.combinations(), "latent index out of range");
  std::vector<Category> cats(s.factors());
  for (std::size_t k = s.factors(); k-- > 0;) {
    cats[k] = static_cast<Category>(index % s.count(k));
    index /= s.count(k);
  }
  return cats;
}

CodeMatrix enumerate_code_matrix(const LatentStructure& s, std::uint64_t cap) {
  if (s.combinations() > cap)
    fail(ErrorCode::invalid_argument, "code matrix with " + std::to_string(s.combinations()) +
                                          " rows exceeds the enumeration cap of " +
                                          std::to_string(cap));
  const auto p = static_cast<std::size_t>(s.combinations());
  const std::size_t m = s.factors();
  CodeMatrix out{s, nn::Tensor2(p, s.total_categories()), std::vector<Category>(p * m)};
  std::vector<Category> cats(m, 0);
  for (std::size_t r = 0; r < p; ++r) {
    std::copy(cats.begin(), cats.end(), out.categories.begin() + static_cast<std::ptrdiff_t>(r * m));
    write_onehot(s, cats, out.rows.row(r));
    // Odometer increment with the last factor cycling fastest.
    for (std::size_t k = m; k-- > 0;) {
      if (++cats[k] < s.count(k)) break;
      cats[k] = 0;
    }
  }
  return out;
}

}  // namespace wta::data
