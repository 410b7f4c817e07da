#include "qvoter/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "qvoter/csv.hpp"
#include "qvoter/duality.hpp"
#include "qvoter/equilibrium.hpp"
#include "qvoter/greens.hpp"
#include "qvoter/ode.hpp"
#include "qvoter/parallel.hpp"
#include "qvoter/reaction.hpp"
#include "qvoter/statistics.hpp"

#ifndef QVOTER_VERSION
#define QVOTER_VERSION "unknown"
#endif

namespace qvoter {

std::string version_string() { return QVOTER_VERSION; }

QVoterParams model_params(const ExperimentConfig& c, int k) {
  if (c.model == "perturbation") {
    return QVoterParams::perturbation(
        c.epsilon, perturbation_rates(k, c.regime == "qgt1" ? Regime::q_above_one : Regime::q_below_one));
  }
  return QVoterParams::direct(c.q);
}

namespace {

Vec3 slice_coords(char axis, int level, int row, int col) {
  switch (axis) {
    case 'x':
      return {level, col, row};
    case 'y':
      return {col, level, row};
    case 'z':
      return {col, row, level};
    default:
      throw std::invalid_argument(std::string("axis must be x, y or z, got '") + axis + "'");
  }
}

void check_level(const Configuration& config, char axis, int level) {
  if (axis != 'x' && axis != 'y' && axis != 'z') {
    throw std::invalid_argument(std::string("axis must be x, y or z, got '") + axis + "'");
  }
  if (level < 0 || level >= config.lattice().side()) throw std::invalid_argument("level must lie in [0, L)");
}

}  // namespace

void snapshot_cross_section(std::ostream& out, const Configuration& config, char axis, int level,
                            const SnapshotHeader& header) {
  check_level(config, axis, level);
  const int side = config.lattice().side();
  out << format_snapshot_header(header) << '\n';
  std::string line(static_cast<std::size_t>(side), '0');
  for (int row = 0; row < side; ++row) {
    for (int col = 0; col < side; ++col) {
      line[static_cast<std::size_t>(col)] =
          config.get(config.lattice().index(slice_coords(axis, level, row, col))) ? '1' : '0';
    }
    out << line << '\n';
  }
}

SliceStats slice_stats(const Configuration& config, char axis, int level) {
  check_level(config, axis, level);
  const int side = config.lattice().side();
  SliceStats s;
  for (int row = 0; row < side; ++row) {
    for (int col = 0; col < side; ++col) {
      if (config.get(config.lattice().index(slice_coords(axis, level, row, col)))) ++s.ones;
      ++s.sites;
    }
  }
  s.density = static_cast<double>(s.ones) / static_cast<double>(s.sites);
  s.majority_share = std::max(s.density, 1.0 - s.density);
  return s;
}

namespace {

struct Mean {
  double mean = 0.0;
  double se = 0.0;
};

Mean mean_se(const std::vector<double>& xs) {
  Mean m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) m.se = std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
  return m;
}

class Outputs {
 public:
  Outputs(std::filesystem::path dir, RunRecord& record) : dir_(std::move(dir)), record_(&record) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
      throw std::runtime_error("cannot create output directory " + dir_.string());
    }
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& fn) {
    const auto path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      fn(out);
      if (!out) throw std::runtime_error("error writing " + path.string());
    }
    record_->files.push_back(OutputFile{name, file_hash(path)});
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  RunRecord* record_;
};

std::string line_of(std::initializer_list<std::string> parts) {
  std::string out;
  for (const auto& p : parts) out += p;
  return out;
}

void run_persistence(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  std::ostringstream rows;
  std::ostringstream summary;
  CsvWriter rows_csv(rows);
  rows_csv.header({"L", "replicate", "occupancy", "final_density", "absorbed"});
  CsvWriter sum_csv(summary);
  sum_csv.header({"L", "n", "t_max", "mean_occupancy", "se", "absorbed"});
  for (int side : c.sizes) {
    const TorusLattice lattice(side, c.offsets);
    const QVoterParams params = model_params(c, lattice.k());
    const std::uint64_t master = stream_seed(c.seed, static_cast<std::uint64_t>(side));
    struct Result {
      double occupancy = 0.0;
      double final_density = 0.0;
      bool absorbed = false;
      std::vector<double> times;
      std::vector<double> densities;
      std::vector<std::uint64_t> events;
    };
    auto results = run_replicas(c.replicates, c.threads, [&](std::size_t i) {
      Engine rng = make_stream(master, i);
      Configuration config(lattice);
      set_product_measure(config, c.u0, rng);
      const Trajectory traj = run(std::move(config), params, c.t_max, rng, c.sample_dt);
      Result r;
      const double cut = c.transient_fraction * c.t_max;
      std::size_t inside = 0;
      std::size_t total = 0;
      for (std::size_t s = 0; s < traj.times.size(); ++s) {
        if (traj.times[s] < cut) continue;
        ++total;
        if (std::abs(traj.densities[s] - 0.5) <= c.band) ++inside;
      }
      r.occupancy = total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
      r.final_density = traj.densities.back();
      r.absorbed = traj.absorbed;
      if (i == 0) {
        r.times = traj.times;
        r.densities = traj.densities;
        r.events = traj.events;
      }
      return r;
    });
    std::vector<double> occ;
    std::size_t absorbed = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      occ.push_back(r.occupancy);
      absorbed += r.absorbed ? 1 : 0;
      rows_csv.field(side).field(static_cast<std::uint64_t>(i)).field(r.occupancy).field(r.final_density).field(
          r.absorbed ? 1 : 0);
      rows_csv.end_row();
    }
    const Mean m = mean_se(occ);
    sum_csv.field(side)
        .field(static_cast<std::uint64_t>(lattice.size()))
        .field(c.t_max)
        .field(m.mean)
        .field(m.se)
        .field(static_cast<std::uint64_t>(absorbed));
    sum_csv.end_row();
    rec.summary.push_back(line_of({"L=", std::to_string(side), " mean occupancy ", format_real(m.mean), " +- ",
                                   format_real(m.se)}));
    Trajectory first{Configuration(lattice)};
    first.times = results[0].times;
    first.densities = results[0].densities;
    first.events = results[0].events;
    out.write("trajectory_L" + std::to_string(side) + ".csv",
              [&](std::ostream& os) { write_trajectory_csv(os, first); });
  }
  out.write("persistence.csv", [&](std::ostream& os) { os << rows.str(); });
  out.write("persistence_summary.csv", [&](std::ostream& os) { os << summary.str(); });
}

void run_extinction(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  std::ostringstream summary;
  CsvWriter sum_csv(summary);
  sum_csv.header({"L", "n", "t_max", "absorbed", "fixed_at_one", "censored", "mean_time", "se"});
  for (int side : c.sizes) {
    const TorusLattice lattice(side, c.offsets);
    const QVoterParams params = model_params(c, lattice.k());
    const double t_max = c.t_max > 0.0 ? c.t_max : 50.0 * static_cast<double>(lattice.size());
    const auto samples = extinction_ensemble(lattice, params, c.u0, c.replicates, t_max,
                                             stream_seed(c.seed, static_cast<std::uint64_t>(side)), c.threads);
    std::uint64_t absorbed = 0;
    std::uint64_t fixed = 0;
    std::vector<double> times;
    for (const auto& s : samples) {
      absorbed += s.absorbed ? 1 : 0;
      fixed += s.fixed_at_one ? 1 : 0;
      if (s.absorbed) times.push_back(s.time);
    }
    const Mean m = mean_se(times);
    sum_csv.field(side)
        .field(static_cast<std::uint64_t>(lattice.size()))
        .field(t_max)
        .field(absorbed)
        .field(fixed)
        .field(static_cast<std::uint64_t>(samples.size()) - absorbed)
        .field(m.mean)
        .field(m.se);
    sum_csv.end_row();
    rec.summary.push_back(line_of({"L=", std::to_string(side), " absorbed ", std::to_string(absorbed), "/",
                                   std::to_string(samples.size()), " fixed at 1: ", std::to_string(fixed),
                                   " mean time ", format_real(m.mean)}));
    out.write("extinction_L" + std::to_string(side) + ".csv",
              [&](std::ostream& os) { write_extinction_csv(os, samples); });
  }
  out.write("extinction_summary.csv", [&](std::ostream& os) { os << summary.str(); });
}

void run_duality(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  const TorusLattice lattice(c.side, c.offsets);
  const auto est = check_duality(lattice, c.set_a, c.set_b, c.t, c.replicates, c.seed, c.threads);
  out.write("duality.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"L", "t", "replicates", "p_forward", "se_forward", "p_dual", "se_dual", "agrees"});
    csv.field(c.side).field(c.t).field(c.replicates).field(est.p_forward).field(est.se_forward).field(
        est.p_dual).field(est.se_dual).field(est.agrees() ? 1 : 0);
    csv.end_row();
  });
  rec.summary.push_back(line_of({"forward ", format_real(est.p_forward), " +- ", format_real(est.se_forward),
                                 ", dual ", format_real(est.p_dual), " +- ", format_real(est.se_dual),
                                 est.agrees() ? " (agree within 3 SE)" : " (DISAGREE)"}));
}

FateDistribution fates_for(const ExperimentConfig& c) {
  if (!c.fates_file.empty()) {
    std::ifstream in(c.fates_file);
    if (!in) throw std::runtime_error("cannot read fates file " + c.fates_file);
    auto fates = FateDistribution::read_csv(in, c.t_trunc);
    if (fates.k() != static_cast<int>(c.offsets.size())) {
      throw std::runtime_error("fates file k does not match the offsets");
    }
    return fates;
  }
  return coalescence_fates(c.offsets, c.t_trunc, c.fate_replicates, stream_seed(c.seed, 0xfa7e), c.threads);
}

void run_reaction(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  const int k = static_cast<int>(c.offsets.size());
  const FateDistribution fates = fates_for(c);
  const RateTable rates = perturbation_rates(k, c.regime == "qgt1" ? Regime::q_above_one : Regime::q_below_one);
  const ReactionTerm term = phi_from_fates(fates, rates);
  out.write("fates.csv", [&](std::ostream& os) { fates.write_csv(os); });
  out.write("reaction.csv", [&](std::ostream& os) { write_reaction_csv(os, term); });
  const auto margins = structural_margins(k, rates.values());
  std::size_t violations = 0;
  out.write("structural.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"signature", "a", "b", "margin"});
    for (const auto& m : margins) {
      if (m.margin * (c.regime == "qgt1" ? -1.0 : 1.0) <= 0.0) ++violations;
      csv.field(m.signature.to_string()).field(m.a).field(m.b).field(m.margin);
      csv.end_row();
    }
  });
  out.write("factored.txt", [&](std::ostream& os) {
    os << "phi(u) = " << factored_string(term) << '\n';
    os << "min f on grid = " << format_real(term.f_grid_min) << '\n';
  });
  rec.summary.push_back("phi(u) = " + factored_string(term));
  rec.summary.push_back("c_k = " + format_real(term.c_k) + ", min f on [0,1] grid = " + format_real(term.f_grid_min));
  rec.summary.push_back("structural margins: " + std::to_string(margins.size()) + " checked, " +
                        std::to_string(violations) + " with the wrong sign");
  if (c.truncation_check) {
    const auto check = truncation_check(c.offsets, c.t_trunc, c.fate_replicates, stream_seed(c.seed, 0x7c), c.threads);
    out.write("truncation.csv", [&](std::ostream& os) {
      CsvWriter csv(os);
      csv.header({"signature", "p_t", "p_2t", "se"});
      for (const auto& r : check.rows) {
        csv.field(r.signature.to_string()).field(r.p_short).field(r.p_long).field(r.se);
        csv.end_row();
      }
    });
    rec.summary.push_back(std::string("truncation check (t vs 2t within 2 SE): ") + (check.passed ? "pass" : "fail"));
  }
}

void run_ode_compare(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  const int k = static_cast<int>(c.offsets.size());
  const Regime regime = c.regime == "qgt1" ? Regime::q_above_one : Regime::q_below_one;
  const FateDistribution fates = fates_for(c);
  const ReactionTerm term = phi_from_fates(fates, perturbation_rates(k, regime));
  const OdeRhs rhs = reaction_rhs(term);
  std::ostringstream summary;
  CsvWriter sum_csv(summary);
  sum_csv.header({"L", "n", "epsilon", "particle_time", "mean_sup_deviation", "se"});
  for (int side : c.sizes) {
    const TorusLattice lattice(side, c.offsets);
    const double eps = std::pow(static_cast<double>(lattice.size()), -c.epsilon_exponent);
    const QVoterParams params =
        c.model == "perturbation"
            ? QVoterParams::perturbation(eps, perturbation_rates(k, regime))
            : QVoterParams::direct(regime == Regime::q_below_one ? 1.0 - eps : 1.0 + eps);
    const auto cmp = compare_particle_ode(lattice, params, rhs, c.u0, c.t0, eps, c.replicates,
                                          stream_seed(c.seed, static_cast<std::uint64_t>(side)), c.threads);
    const OdeSolution sol = integrate(rhs, c.u0, c.t0, c.t0 / 50.0);
    out.write("ode_L" + std::to_string(side) + ".csv", [&](std::ostream& os) { write_ode_csv(os, sol); });
    out.write("comparison_L" + std::to_string(side) + ".csv",
              [&](std::ostream& os) { write_comparison_csv(os, cmp); });
    sum_csv.field(side)
        .field(static_cast<std::uint64_t>(lattice.size()))
        .field(eps)
        .field(cmp.particle_time)
        .field(cmp.mean)
        .field(cmp.standard_error);
    sum_csv.end_row();
    rec.summary.push_back(line_of({"L=", std::to_string(side), " eps=", format_real(eps), " mean sup deviation ",
                                   format_real(cmp.mean), " +- ", format_real(cmp.standard_error)}));
  }
  out.write("ode_compare_summary.csv", [&](std::ostream& os) { os << summary.str(); });
}

void run_box_clt(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  const TorusLattice lattice(c.side, c.offsets);
  struct Result {
    std::vector<BoxSumSample> voter;
    std::vector<BoxSumSample> product;
  };
  auto results = run_replicas(c.replicates, c.threads, [&](std::size_t i) {
    Engine rng = make_stream(c.seed, i);
    Result r;
    const Configuration eq = sample_nu_u(lattice, c.u0, c.burn, rng);
    Configuration prod(lattice);
    set_product_measure(prod, c.u0, rng);
    for (int radius : c.box_r) {
      r.voter.push_back(box_sums(eq, radius, c.lambda));
      r.product.push_back(box_sums(prod, radius, c.lambda));
    }
    return r;
  });
  out.write("box_sums.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"source", "config", "r", "cube_index", "value"});
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (const auto* set : {&results[i].voter, &results[i].product}) {
        const char* source = set == &results[i].voter ? "voter" : "product";
        for (const auto& s : *set) {
          for (std::size_t j = 0; j < s.values.size(); ++j) {
            csv.field(source).field(static_cast<std::uint64_t>(i)).field(s.r).field(static_cast<std::uint64_t>(j)).field(
                s.values[j]);
            csv.end_row();
          }
        }
      }
    }
  });
  std::ostringstream var;
  CsvWriter var_csv(var);
  var_csv.header({"source", "r", "variance", "normalized_variance", "kurtosis"});
  for (const char* source : {"voter", "product"}) {
    const bool voter = std::string(source) == "voter";
    std::vector<ScaleSample> scales;
    for (std::size_t ri = 0; ri < c.box_r.size(); ++ri) {
      ScaleSample s{c.box_r[ri], {}};
      for (const auto& r : results) {
        const auto& b = voter ? r.voter[ri] : r.product[ri];
        s.sums.insert(s.sums.end(), b.raw.begin(), b.raw.end());
      }
      scales.push_back(std::move(s));
    }
    for (const auto& s : scales) {
      const double v = sample_variance(s.sums);
      const double norm = v / (c.lambda * (1.0 - c.lambda) * std::pow(s.r, 5.0));
      var_csv.field(source).field(s.r).field(v).field(norm).field(kurtosis(s.sums));
      var_csv.end_row();
    }
    const VarianceFit fit = variance_exponent(scales);
    rec.summary.push_back(line_of({source, " log-variance slope ", format_real(fit.slope), " +- ",
                                   format_real(fit.slope_se)}));
  }
  out.write("variance.csv", [&](std::ostream& os) { os << var.str(); });
}

void run_greens(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  const RateFunction rate = RateFunction::parse(c.rate);
  const double exact = expected_hitting_time(c.x, c.z, rate);
  const auto sim = simulate_hitting(c.x, c.z, rate, c.replicates, c.seed, c.threads);
  out.write("greens.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"x", "z", "rate", "exact", "sim_mean", "sim_se", "p_hit_z", "p_hit_z_se", "x_over_z"});
    csv.field(c.x).field(c.z).field(rate.describe()).field(exact).field(sim.mean_time).field(sim.time_se).field(
        sim.hit_top).field(sim.hit_top_se).field(static_cast<double>(c.x) / static_cast<double>(c.z));
    csv.end_row();
  });
  rec.summary.push_back("E_x T = " + format_real(exact) + ", simulated " + format_real(sim.mean_time) + " +- " +
                        format_real(sim.time_se));
  rec.summary.push_back("P(hit z first) = " + format_real(sim.hit_top) + " +- " + format_real(sim.hit_top_se) +
                        " (x/z = " + format_real(static_cast<double>(c.x) / static_cast<double>(c.z)) + ")");
}

void run_snapshot(const ExperimentConfig& c, Outputs& out, RunRecord& rec) {
  const TorusLattice lattice(c.side, c.offsets);
  const QVoterParams params = model_params(c, lattice.k());
  Engine rng = make_stream(c.seed, 0);
  Configuration config(lattice);
  set_product_measure(config, c.u0, rng);
  Simulator sim(std::move(config), params);
  while (sim.step(rng, c.t_max)) {
  }
  const SnapshotHeader header{c.side, sim.time(), c.model == "direct" ? c.q : 1.0, c.seed};
  out.write("snapshot.txt", [&](std::ostream& os) { write_snapshot(os, sim.state(), header); });
  out.write("cross_section.txt",
            [&](std::ostream& os) { snapshot_cross_section(os, sim.state(), c.axis, c.level, header); });
  const SliceStats s = slice_stats(sim.state(), c.axis, c.level);
  out.write("slice.csv", [&](std::ostream& os) {
    CsvWriter csv(os);
    csv.header({"axis", "level", "time", "density", "slice_density", "majority_share", "events"});
    csv.field(std::string(1, c.axis)).field(c.level).field(sim.time()).field(sim.state().density()).field(
        s.density).field(s.majority_share).field(sim.events());
    csv.end_row();
  });
  rec.summary.push_back("t=" + format_real(sim.time()) + " density " + format_real(sim.state().density()) +
                        ", slice density " + format_real(s.density));
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config.echo;
  rec.version = version_string();
  Outputs out(config.out, rec);
  switch (config.kind) {
    case ExperimentKind::persistence:
      run_persistence(config, out, rec);
      break;
    case ExperimentKind::extinction:
      run_extinction(config, out, rec);
      break;
    case ExperimentKind::duality_check:
      run_duality(config, out, rec);
      break;
    case ExperimentKind::reaction_term:
      run_reaction(config, out, rec);
      break;
    case ExperimentKind::ode_compare:
      run_ode_compare(config, out, rec);
      break;
    case ExperimentKind::box_clt:
      run_box_clt(config, out, rec);
      break;
    case ExperimentKind::greens:
      run_greens(config, out, rec);
      break;
    case ExperimentKind::snapshot:
      run_snapshot(config, out, rec);
      break;
  }
  out.write("summary.txt", [&](std::ostream& os) {
    for (const auto& line : rec.summary) os << line << '\n';
  });
  nlohmann::json meta;
  meta["config"] = rec.config;
  meta["version"] = rec.version;
  auto files = nlohmann::json::array();
  for (const auto& f : rec.files) {
    std::ostringstream hex;
    hex << std::hex << f.hash;
    files.push_back({{"name", f.name}, {"fnv1a64", hex.str()}});
  }
  meta["files"] = files;
  out.write("metadata.json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace qvoter
