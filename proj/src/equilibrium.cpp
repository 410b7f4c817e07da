#include "qvoter/equilibrium.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "qvoter/csv.hpp"
#include "qvoter/dynamics.hpp"
#include "qvoter/parallel.hpp"

namespace qvoter {

int FateSignature::k() const {
  return s0 + std::accumulate(clusters.begin(), clusters.end(), 0);
}

std::string FateSignature::to_string() const {
  std::string out = std::to_string(s0) + ";";
  if (clusters.empty()) return out + "0";
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(clusters[i]);
  }
  return out;
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw std::invalid_argument("malformed fate signature '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

FateSignature FateSignature::parse(std::string_view text) {
  const auto semi = text.find(';');
  if (semi == std::string_view::npos) {
    throw std::invalid_argument("malformed fate signature '" + std::string(text) + "'");
  }
  FateSignature sig;
  sig.s0 = parse_int(text.substr(0, semi), text);
  std::string_view rest = text.substr(semi + 1);
  if (rest == "0") return sig;
  while (true) {
    const auto comma = rest.find(',');
    const int size = parse_int(rest.substr(0, comma), text);
    if (size == 0) throw std::invalid_argument("empty cluster in fate signature '" + std::string(text) + "'");
    sig.clusters.push_back(size);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  std::sort(sig.clusters.begin(), sig.clusters.end());
  return sig;
}

namespace {

void partitions(int remaining, int max_part, std::vector<int>& current,
                std::vector<std::vector<int>>& out) {
  if (remaining == 0) {
    out.emplace_back(current.rbegin(), current.rend());
    return;
  }
  for (int part = std::min(remaining, max_part); part >= 1; --part) {
    current.push_back(part);
    partitions(remaining - part, part, current, out);
    current.pop_back();
  }
}

}  // namespace

std::vector<FateSignature> enumerate_signatures(int k) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  std::vector<FateSignature> out;
  for (int s0 = 0; s0 <= k; ++s0) {
    std::vector<std::vector<int>> parts;
    std::vector<int> current;
    partitions(k - s0, k - s0, current, parts);
    for (auto& p : parts) out.push_back(FateSignature{s0, std::move(p)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

FateDistribution FateDistribution::from_counts(int k,
                                               const std::map<FateSignature, std::uint64_t>& counts,
                                               double t_trunc) {
  FateDistribution d;
  d.k_ = k;
  d.t_trunc_ = t_trunc;
  for (const auto& [sig, c] : counts) {
    if (sig.k() != k) throw std::invalid_argument("signature " + sig.to_string() + " does not match k");
    d.samples_ += c;
  }
  if (d.samples_ == 0) throw std::invalid_argument("fate distribution needs at least one sample");
  for (const auto& [sig, c] : counts) {
    if (c == 0) continue;
    d.counts_[sig] = c;
    d.probs_[sig] = Rational(c, d.samples_);
  }
  return d;
}

FateDistribution FateDistribution::from_probabilities(int k, std::map<FateSignature, Rational> probs) {
  FateDistribution d;
  d.k_ = k;
  for (const auto& [sig, p] : probs) {
    if (sig.k() != k) throw std::invalid_argument("signature " + sig.to_string() + " does not match k");
    if (p < 0) throw std::invalid_argument("negative fate probability");
  }
  d.probs_ = std::move(probs);
  return d;
}

Rational FateDistribution::probability(const FateSignature& sig) const {
  const auto it = probs_.find(sig);
  return it == probs_.end() ? Rational(0) : it->second;
}

std::uint64_t FateDistribution::count(const FateSignature& sig) const {
  const auto it = counts_.find(sig);
  return it == counts_.end() ? 0 : it->second;
}

double FateDistribution::standard_error(const FateSignature& sig) const {
  if (samples_ == 0) return 0.0;
  const double p = to_double(probability(sig));
  return std::sqrt(p * (1.0 - p) / static_cast<double>(samples_));
}

bool FateDistribution::normalized() const {
  Rational total = 0;
  for (const auto& [sig, p] : probs_) total += p;
  return total == 1;
}

void FateDistribution::write_csv(std::ostream& out) const {
  CsvWriter csv(out);
  csv.header({"signature", "probability", "stderr", "count"});
  for (const auto& [sig, p] : probs_) {
    csv.field(sig.to_string()).field(to_double(p)).field(standard_error(sig)).field(count(sig));
    csv.end_row();
  }
}

namespace {

// Exact value of a decimal literal such as "-1.25e-3".
Rational parse_decimal(std::string_view s) {
  double check = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), check);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument("malformed number '" + std::string(s) + "'");
  }
  std::size_t i = 0;
  bool negative = false;
  if (s[i] == '-' || s[i] == '+') negative = s[i++] == '-';
  boost::multiprecision::cpp_int mantissa = 0;
  int scale = 0;
  bool fraction = false;
  for (; i < s.size() && s[i] != 'e' && s[i] != 'E'; ++i) {
    if (s[i] == '.') {
      fraction = true;
      continue;
    }
    mantissa = mantissa * 10 + (s[i] - '0');
    if (fraction) --scale;
  }
  if (i < s.size()) {
    int exp = 0;
    std::string_view e = s.substr(i + 1);
    if (!e.empty() && e[0] == '+') e.remove_prefix(1);
    std::from_chars(e.data(), e.data() + e.size(), exp);
    scale += exp;
  }
  Rational value(mantissa);
  const Rational ten(10);
  for (int j = 0; j < std::abs(scale); ++j) {
    if (scale > 0) {
      value *= ten;
    } else {
      value /= ten;
    }
  }
  return negative ? Rational(-value) : value;
}

}  // namespace

FateDistribution FateDistribution::read_csv(std::istream& in, double t_trunc) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty fate CSV");
  if (line != "signature,probability,stderr,count") {
    throw std::runtime_error("unexpected fate CSV header '" + line + "'");
  }
  std::map<FateSignature, std::uint64_t> counts;
  std::map<FateSignature, Rational> probs;
  bool have_counts = true;
  int k = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) throw std::runtime_error("fate CSV row needs 4 fields: '" + line + "'");
    const FateSignature sig = FateSignature::parse(fields[0]);
    if (k < 0) k = sig.k();
    if (sig.k() != k) throw std::runtime_error("fate CSV mixes neighborhood sizes");
    std::uint64_t c = 0;
    const auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), c);
    if (ec != std::errc() || ptr != fields[3].data() + fields[3].size()) {
      throw std::runtime_error("malformed count in fate CSV: '" + line + "'");
    }
    if (c == 0) have_counts = false;
    counts[sig] = c;
    probs[sig] = parse_decimal(fields[1]);
  }
  if (k < 0) throw std::runtime_error("fate CSV has no rows");
  if (have_counts) return from_counts(k, counts, t_trunc);
  FateDistribution d = from_probabilities(k, std::move(probs));
  d.t_trunc_ = t_trunc;
  return d;
}

namespace {

constexpr int kFieldBits = 21;
constexpr std::int64_t kBias = std::int64_t{1} << (kFieldBits - 1);

std::int64_t pack(const Vec3& v) {
  return ((v.x + kBias) << (2 * kFieldBits)) | ((v.y + kBias) << kFieldBits) | (v.z + kBias);
}

std::int64_t pack_delta(const Vec3& v) {
  return (std::int64_t{v.x} << (2 * kFieldBits)) + (std::int64_t{v.y} << kFieldBits) + v.z;
}

// Exactly uniform draws from [0, n): each accepted 32-bit word yields
// several base-n digits.
class ChoiceStream {
 public:
  explicit ChoiceStream(std::uint32_t n) : n_(n) {
    std::uint64_t block = n;
    while (block * n <= (std::uint64_t{1} << 32)) {
      block *= n;
      ++digits_;
    }
    limit_ = ((std::uint64_t{1} << 32) / block) * block;
    inverse_ = ~std::uint64_t{0} / n + 1;
  }

  std::uint32_t next(Engine& rng) {
    if (left_ == 0) refill(rng);
    --left_;
    // Division by the precomputed reciprocal, exact for 32-bit words.
    const auto q = static_cast<std::uint32_t>((static_cast<unsigned __int128>(inverse_) * word_) >> 64);
    const std::uint32_t d = word_ - q * n_;
    word_ = q;
    return d;
  }

 private:
  void refill(Engine& rng) {
    while (true) {
      if (!have_spare_) {
        const std::uint64_t r = rng();
        spare_ = r & 0xffffffffULL;
        have_spare_ = true;
        if ((r >> 32) < limit_) {
          word_ = static_cast<std::uint32_t>(r >> 32);
          break;
        }
      }
      have_spare_ = false;
      if (spare_ < limit_) {
        word_ = static_cast<std::uint32_t>(spare_);
        break;
      }
    }
    left_ = digits_;
  }

  std::uint32_t n_;
  std::uint64_t inverse_ = 0;
  int digits_ = 1;
  std::uint64_t limit_ = 0;
  std::uint32_t word_ = 0;
  int left_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

std::int64_t l1_distance(std::int64_t a, std::int64_t b) {
  constexpr std::int64_t mask = (std::int64_t{1} << kFieldBits) - 1;
  std::int64_t d = 0;
  for (int shift = 0; shift < 3 * kFieldBits; shift += kFieldBits) {
    d += std::abs(((a >> shift) & mask) - ((b >> shift) & mask));
  }
  return d;
}

}  // namespace

std::vector<int> coalesce_on_z3(std::span<const Vec3> starts, std::span<const Vec3> offsets,
                                double t, Engine& rng) {
  const int m = static_cast<int>(starts.size());
  const int k = static_cast<int>(offsets.size());
  if (m < 1 || m > 64) throw std::invalid_argument("coalescing walks need 1..64 walkers");
  if (k < 1) throw std::invalid_argument("coalescing walks need offsets");
  if (!(t >= 0.0)) throw std::invalid_argument("walk time must be non-negative");

  std::vector<int> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::int64_t> pos(static_cast<std::size_t>(m));
  std::vector<int> reps;
  for (int i = 0; i < m; ++i) {
    pos[static_cast<std::size_t>(i)] = pack(starts[static_cast<std::size_t>(i)]);
    int dup = -1;
    for (int r : reps) {
      if (pos[static_cast<std::size_t>(r)] == pos[static_cast<std::size_t>(i)]) dup = r;
    }
    if (dup >= 0) {
      parent[static_cast<std::size_t>(i)] = dup;
    } else {
      reps.push_back(i);
    }
  }
  std::vector<std::int64_t> delta(static_cast<std::size_t>(k));
  int reach = 0;
  for (int j = 0; j < k; ++j) {
    const Vec3& o = offsets[static_cast<std::size_t>(j)];
    delta[static_cast<std::size_t>(j)] = pack_delta(o);
    reach = std::max({reach, std::abs(o.x), std::abs(o.y), std::abs(o.z)});
  }

  std::uint64_t steps = 0;
  if (t > 0.0 && reps.size() > 1) {
    std::poisson_distribution<std::uint64_t> poisson(static_cast<double>(m) * t);
    steps = poisson(rng);
  }
  for (const Vec3& s : starts) reach = std::max({reach, std::abs(s.x), std::abs(s.y), std::abs(s.z)});
  if (static_cast<double>(steps) * reach + reach >= static_cast<double>(kBias)) {
    throw std::invalid_argument("walk horizon too long for packed coordinates");
  }

  // Positions are kept per label; merged labels keep moving harmlessly so the
  // unchecked loop needs no branch.
  std::vector<int> live = reps;
  std::vector<char> alive(static_cast<std::size_t>(m), 0);
  for (int r : reps) alive[static_cast<std::size_t>(r)] = 1;
  std::int64_t ell = 1;
  for (const Vec3& o : offsets) ell = std::max<std::int64_t>(ell, std::abs(o.x) + std::abs(o.y) + std::abs(o.z));
  const auto ku = static_cast<std::uint32_t>(k);
  const std::size_t choices_count = static_cast<std::size_t>(m) * ku;
  std::vector<std::uint32_t> label_of(choices_count);
  std::vector<std::int64_t> delta_of(choices_count);
  for (std::size_t c = 0; c < choices_count; ++c) {
    label_of[c] = static_cast<std::uint32_t>(c / ku);
    delta_of[c] = delta[c % ku];
  }
  ChoiceStream choices(static_cast<std::uint32_t>(choices_count));
  // One step changes any pairwise L1 distance by at most ell, so after a gap
  // of D the next (D - 1) / ell steps cannot produce a collision.
  auto safe_steps = [&]() -> std::uint64_t {
    std::int64_t gap = std::numeric_limits<std::int64_t>::max();
    for (std::size_t a = 0; a < live.size(); ++a) {
      for (std::size_t b = a + 1; b < live.size(); ++b) {
        gap = std::min(gap, l1_distance(pos[static_cast<std::size_t>(live[a])],
                                         pos[static_cast<std::size_t>(live[b])]));
      }
    }
    return gap > ell ? static_cast<std::uint64_t>((gap - 1) / ell) : 0;
  };

  std::uint64_t s = 0;
  std::uint64_t free_steps = safe_steps();
  while (s < steps && live.size() > 1) {
    if (free_steps > 0) {
      const std::uint64_t n = std::min(free_steps, steps - s);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint32_t c = choices.next(rng);
        pos[label_of[c]] += delta_of[c];
      }
      s += n;
      free_steps = safe_steps();
      continue;
    }
    const std::uint32_t c = choices.next(rng);
    ++s;
    const std::size_t label = label_of[c];
    if (!alive[label]) continue;
    const std::int64_t next = pos[label] + delta_of[c];
    int hit = -1;
    for (int q : live) {
      if (static_cast<std::size_t>(q) != label && pos[static_cast<std::size_t>(q)] == next) {
        hit = q;
        break;
      }
    }
    if (hit < 0) {
      pos[label] = next;
    } else {
      parent[label] = hit;
      alive[label] = 0;
      live.erase(std::find(live.begin(), live.end(), static_cast<int>(label)));
    }
    if (live.size() > 1) free_steps = safe_steps();
  }
  for (int i = 0; i < m; ++i) {
    int r = i;
    while (parent[static_cast<std::size_t>(r)] != r) r = parent[static_cast<std::size_t>(r)];
    parent[static_cast<std::size_t>(i)] = r;
  }
  return parent;
}

FateSignature classify_partition(std::span<const int> root_of_label) {
  if (root_of_label.empty()) throw std::invalid_argument("empty partition");
  const int origin = root_of_label[0];
  FateSignature sig;
  std::map<int, int> sizes;
  for (std::size_t i = 1; i < root_of_label.size(); ++i) {
    if (root_of_label[i] == origin) {
      ++sig.s0;
    } else {
      ++sizes[root_of_label[i]];
    }
  }
  for (const auto& [root, size] : sizes) sig.clusters.push_back(size);
  std::sort(sig.clusters.begin(), sig.clusters.end());
  return sig;
}

FateDistribution coalescence_fates(std::span<const Vec3> offsets, double t_trunc,
                                   std::uint64_t replicates, std::uint64_t seed, unsigned threads) {
  if (replicates < 1) throw std::invalid_argument("coalescence fates need at least one replicate");
  const int k = static_cast<int>(offsets.size());
  std::vector<Vec3> starts{Vec3{}};
  starts.insert(starts.end(), offsets.begin(), offsets.end());

  constexpr std::uint64_t kBlocks = 256;
  const std::uint64_t blocks = std::min(kBlocks, replicates);
  auto partial = run_replicas(static_cast<std::size_t>(blocks), threads, [&](std::size_t block) {
    Engine rng = make_stream(seed, block);
    const std::uint64_t lo = replicates * block / blocks;
    const std::uint64_t hi = replicates * (block + 1) / blocks;
    std::map<FateSignature, std::uint64_t> counts;
    for (std::uint64_t r = lo; r < hi; ++r) {
      const auto roots = coalesce_on_z3(starts, offsets, t_trunc, rng);
      ++counts[classify_partition(roots)];
    }
    return counts;
  });
  std::map<FateSignature, std::uint64_t> total;
  for (const auto& counts : partial) {
    for (const auto& [sig, c] : counts) total[sig] += c;
  }
  return FateDistribution::from_counts(k, total, t_trunc);
}

TruncationCheck truncation_check(std::span<const Vec3> offsets, double t_trunc,
                                 std::uint64_t replicates, std::uint64_t seed, unsigned threads) {
  TruncationCheck check;
  check.t_short = t_trunc;
  check.t_long = 2.0 * t_trunc;
  const auto a = coalescence_fates(offsets, check.t_short, replicates, stream_seed(seed, 0), threads);
  const auto b = coalescence_fates(offsets, check.t_long, replicates, stream_seed(seed, 1), threads);
  check.passed = true;
  for (const auto& sig : enumerate_signatures(static_cast<int>(offsets.size()))) {
    TruncationRow row{sig, to_double(a.probability(sig)), to_double(b.probability(sig)), 0.0};
    if (row.p_short == 0.0 && row.p_long == 0.0) continue;
    row.se = std::hypot(a.standard_error(sig), b.standard_error(sig));
    if (std::abs(row.p_long - row.p_short) > 2.0 * row.se) check.passed = false;
    check.rows.push_back(std::move(row));
  }
  return check;
}

Configuration sample_nu_u(const TorusLattice& lattice, double u, double burn_time, Engine& rng) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::invalid_argument("sample_nu_u needs 0 < u < 1; use set_product_measure otherwise");
  }
  if (!(burn_time >= 0.0)) throw std::invalid_argument("burn time must be non-negative");
  Configuration config(lattice);
  set_product_measure(config, u, rng);
  if (burn_time == 0.0) return config;
  Simulator sim(std::move(config), QVoterParams::voter());
  while (sim.step(rng, burn_time)) {
  }
  return sim.state();
}

RhoTable rho_polynomials(const FateDistribution& fates) {
  if (!fates.normalized()) throw std::invalid_argument("fate probabilities do not sum to one");
  const int k = fates.k();
  RhoTable table;
  table.k = k;
  table.q.assign(static_cast<std::size_t>(k) + 1, Polynomial<Rational>{});
  std::map<std::pair<int, int>, Polynomial<Rational>> basis;
  auto monomial = [&](int a, int b) -> const Polynomial<Rational>& {
    auto it = basis.find({a, b});
    if (it == basis.end()) it = basis.emplace(std::pair{a, b}, Polynomial<Rational>::basis(a, b)).first;
    return it->second;
  };
  for (const auto& [sig, p] : fates.probabilities()) {
    if (p == 0) continue;
    const int j = sig.j();
    for (std::uint32_t mask = 0; mask < (1U << j); ++mask) {
      int a = 0;
      int m = 0;
      for (int c = 0; c < j; ++c) {
        if (mask >> c & 1U) {
          ++a;
          m += sig.clusters[static_cast<std::size_t>(c)];
        }
      }
      table.q[static_cast<std::size_t>(m)] += monomial(a, j - a) * p;
    }
  }
  const Polynomial<Rational> one_minus(std::vector<Rational>{1, -1});
  for (const auto& q : table.q) {
    table.rho0.push_back(one_minus * q);
    table.rho1.push_back(Polynomial<Rational>::u() * q.reflect());
  }
  return table;
}

}  // namespace qvoter
