// Command-line surface: seeded field generation plus one subcommand per
// pipeline stage. Every subcommand prints a JSON summary to stdout; --out
// writes reports or field dumps next to it. Exit codes: 0 ok, 2 contract
// violation, 3 fixture mismatch, 4 input error.

#include "rigidlab/calculus.hpp"
#include "rigidlab/extension.hpp"
#include "rigidlab/field_io.hpp"
#include "rigidlab/korn.hpp"
#include "rigidlab/lab.hpp"
#include "rigidlab/lorentz.hpp"
#include "rigidlab/rigidity.hpp"
#include "rigidlab/rotations.hpp"
#include "rigidlab/truncation.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace rigidlab;

struct DomainFlags {
  std::string kind = "square";
  double size = 1.0;
  double lip = 0.5;
  int dim = 2;
  int resolution = 32;
};

struct NoiseFlags {
  double angle = 0.4;
  double tail = 0.3;
  double tail_exponent = 1.5;
  double part = 0.2;
  double density = 0.02;
};

void add_domain_flags(CLI::App* cmd, DomainFlags& d) {
  cmd->add_option("--kind", d.kind, "domain kind: square, lshape, graph_halfball");
  cmd->add_option("--size", d.size, "domain size (radius for graph_halfball)");
  cmd->add_option("--lip", d.lip, "Lipschitz constant of the boundary graph");
  cmd->add_option("--dim", d.dim, "space dimension, 2 or 3");
  cmd->add_option("--resolution", d.resolution, "cells per side");
}

void add_noise_flags(CLI::App* cmd, NoiseFlags& f) {
  cmd->add_option("--angle", f.angle, "base motion angle");
  cmd->add_option("--tail", f.tail, "spike amplitude (low-exponent mass)");
  cmd->add_option("--tail-exponent", f.tail_exponent, "Pareto shape of spike amplitudes");
  cmd->add_option("--part", f.part, "smooth amplitude (high-exponent mass)");
  cmd->add_option("--density", f.density, "spike density per cell");
}

NoiseModel to_model(const NoiseFlags& f) {
  NoiseModel m;
  m.base_angle = f.angle;
  m.tail_amplitude = f.tail;
  m.tail_exponent = f.tail_exponent;
  m.part_amplitude = f.part;
  m.spike_density = f.density;
  return m;
}

std::shared_ptr<const GridDomain> to_domain(const DomainFlags& d) {
  return make_domain(d.kind, d.size, d.resolution, d.lip, d.dim);
}

std::vector<double> parse_exponents(const std::string& spec) {
  std::vector<double> out;
  std::string cur;
  for (char ch : spec + ",") {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

json matrix_to_json(const MatN& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

void write_text(const std::string& path, const std::string& body) {
  std::filesystem::path fp(path);
  if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path());
  std::ofstream out(fp, std::ios::binary);
  if (!out) fail_input("cannot write " + path);
  out << body;
  out.flush();
  if (!out.good()) fail_input("short write to " + path);
}

int cmd_dist(const DomainFlags& df, const NoiseFlags& nf, std::uint64_t seed, double p,
             const std::string& save_path) {
  auto dom = to_domain(df);
  GeneratedField gen = generate_field(to_model(nf), seed, dom, 2, MajorantTarget::rotation);
  MatrixField du = gradient(gen.u);
  ScalarField d = dist_field(du);
  RigidityLpResult lp = rigidity_lp(gen.u, p);
  json out{{"kind", df.kind},
           {"resolution", df.resolution},
           {"seed", seed},
           {"dist_sup", gen.stats.value("defect_sup", 0.0)},
           {"dist_lp", lp_norm(d, p)},
           {"p", p},
           {"rigidity_lp_ratio", lp.ratio},
           {"q", matrix_to_json(lp.q)},
           {"generator", gen.stats}};
  if (!save_path.empty()) {
    write_gfld(save_path, gen.u);
    out["saved"] = save_path;
  }
  print_json(out);
  return 0;
}

int cmd_korn(const DomainFlags& df, const NoiseFlags& nf, std::uint64_t seed,
             const std::string& exponents, const std::string& outdir) {
  auto dom = to_domain(df);
  ExponentList exps(parse_exponents(exponents));
  GeneratedField gen =
      generate_field(to_model(nf), seed, dom, exps.size(), MajorantTarget::symmetric);
  MixedDecomposition md =
      exps.size() == 2
          ? korn_mixed(gen.u, gen.majorants[0], gen.majorants[1], exps[0], exps[1])
          : korn_multi(gen.u, gen.majorants, exps);
  json out{{"branch", md.telemetry.value("branch", std::string())},
           {"ratios", md.ratios},
           {"part_norms", md.part_norms},
           {"majorant_norms", md.majorant_norms},
           {"skew_recovery", (md.constant - gen.base).norm()},
           {"constant", matrix_to_json(md.constant)},
           {"telemetry", md.telemetry},
           {"generator", gen.stats}};
  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    for (std::size_t a = 0; a < md.parts.size(); ++a)
      write_gfld(outdir + "/part_" + std::to_string(a) + ".gfld", md.parts[a]);
    write_gfld(outdir + "/u.gfld", gen.u);
    out["saved"] = outdir;
  }
  print_json(out);
  return 0;
}

int cmd_rigidity(const DomainFlags& df, const NoiseFlags& nf, std::uint64_t seed,
                 const std::string& exponents, bool lipschitz, const std::string& outdir) {
  auto dom = to_domain(df);
  ExponentList exps(parse_exponents(exponents));
  GeneratedField gen =
      generate_field(to_model(nf), seed, dom, exps.size(), MajorantTarget::rotation);
  auto run = [&]() {
    if (lipschitz) {
      if (exps.size() != 2) fail_input("rigidity --lipschitz takes exactly two exponents");
      double m = gen.stats.value("sup_du", 0.0) * (1.0 + 1e-12) + 1e-9;
      return rigidity_lipschitz(gen.u, gen.majorants[0], gen.majorants[1], exps[0], exps[1], m);
    }
    return exps.size() == 2
               ? rigidity_mixed(gen.u, gen.majorants[0], gen.majorants[1], exps[0], exps[1])
               : rigidity_multi(gen.u, gen.majorants, exps);
  };
  RigidityResult rr = run();
  json out{{"branch", rr.telemetry.value("branch", std::string())},
           {"ratios", rr.ratios},
           {"part_norms", rr.part_norms},
           {"majorant_norms", rr.majorant_norms},
           {"rotation_recovery", (rr.q - gen.base).norm()},
           {"q", matrix_to_json(rr.q)},
           {"telemetry", rr.telemetry},
           {"generator", gen.stats}};
  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    for (std::size_t a = 0; a < rr.parts.size(); ++a)
      write_gfld(outdir + "/part_" + std::to_string(a) + ".gfld", rr.parts[a]);
    write_gfld(outdir + "/u.gfld", gen.u);
    out["saved"] = outdir;
  }
  print_json(out);
  return 0;
}

int cmd_extend(const DomainFlags& df, const NoiseFlags& nf, std::uint64_t seed, double p,
               double q, double chart_radius) {
  DomainFlags d = df;
  d.kind = "graph_halfball";
  auto dom = to_domain(d);
  GeneratedField gen = generate_field(to_model(nf), seed, dom, 2, MajorantTarget::symmetric);
  MatrixField eu = sym_grad(gen.u);
  auto [fm, gm] = split_by_majorants(eu, gen.majorants[0], gen.majorants[1]);
  double radius = chart_radius > 0.0 ? chart_radius : 0.45 * d.size;
  ExtensionResult ext = extend(gen.u, fm, gm, p, q, radius);
  json out{{"chart_radius", radius},
           {"ball_radius", ext.r},
           {"residual_sup", ext.residual_sup},
           {"ratio_p", ext.ratio_p},
           {"ratio_q", ext.ratio_q},
           {"beta", ext.dist.beta},
           {"c_upper", ext.dist.c_upper},
           {"c_grad", ext.dist.c_grad},
           {"c_hess", ext.dist.c_hess},
           {"generator", gen.stats}};
  print_json(out);
  return 0;
}

int cmd_truncate(const DomainFlags& df, const NoiseFlags& nf, std::uint64_t seed, double lambda) {
  auto dom = to_domain(df);
  GeneratedField gen = generate_field(to_model(nf), seed, dom, 2, MajorantTarget::rotation);
  double lam = lambda > 0.0 ? lambda : 2.0 * dom->dim;
  TruncationResult tr = truncate(gen.u, lam);
  double agree = 0.0;
  for (auto c : dom->inside_cells())
    if (tr.e_mask[c]) agree = std::max(agree, (tr.u_m.get(c) - gen.u.get(c)).norm());
  json out{{"lambda", tr.lambda},
           {"m", tr.m},
           {"lipschitz_m", tr.lipschitz_m},
           {"e_count", tr.e_count},
           {"excess_measure", tr.excess_measure},
           {"c_e", tr.c_e},
           {"bound_rhs", tr.bound_rhs},
           {"good_set_agreement_sup", agree},
           {"generator", gen.stats}};
  print_json(out);
  return 0;
}

int cmd_lorentz(const DomainFlags& df, const NoiseFlags& nf, std::uint64_t seed, double p,
                double q, const std::string& profile_path) {
  auto dom = to_domain(df);
  GeneratedField gen = generate_field(to_model(nf), seed, dom, 2, MajorantTarget::rotation);
  ScalarField d = dist_field(gradient(gen.u));
  LorentzSpec spec = LorentzSpec::make(p, q);
  double nk = lorentz_norm(d, spec, LorentzForm::k_functional);
  double nr = lorentz_norm(d, spec, LorentzForm::rearrangement);
  LorentzRigidityResult lr = lorentz_rigidity(gen.u, spec);
  json out{{"p", p},
           {"q", q},
           {"theta", spec.theta},
           {"p1", spec.p1},
           {"p2", spec.p2},
           {"norm_k_form", nk},
           {"norm_rearrangement_form", nr},
           {"form_ratio", nr > 0.0 ? nk / nr : 0.0},
           {"rigidity_ratio", lr.ratio},
           {"generator", gen.stats}};
  if (!profile_path.empty()) {
    std::string csv = "t,k\n";
    for (int i = -40; i <= 40; ++i) {
      double t = std::pow(10.0, i / 10.0);
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, k_functional(d, t, spec.p1, spec.p2));
      csv += buf;
    }
    write_text(profile_path, csv);
    out["profile"] = profile_path;
  }
  print_json(out);
  return 0;
}

int cmd_equi(const DomainFlags& df, const NoiseFlags& nf, std::uint64_t seed, double p,
             double eps, int count, const std::string& profile_path) {
  if (count < 1) fail_input("equi: count must be at least 1");
  auto dom = to_domain(df);
  std::vector<VectorField> us;
  std::vector<double> etas;
  std::vector<ScalarField> ds;
  for (int k = 0; k < count; ++k) {
    NoiseFlags f = nf;
    double eta = static_cast<double>(k + 1);
    // amplitudes shrink faster than eta grows, so d_k = eta dist(Du_k, SO)
    // stays equiintegrable along the sequence
    f.tail /= eta * eta;
    f.part /= eta * eta;
    GeneratedField gen =
        generate_field(to_model(f), seed + static_cast<std::uint64_t>(k), dom, 2,
                       MajorantTarget::rotation);
    ScalarField d = dist_field(gradient(gen.u));
    for (auto c : dom->inside_cells()) d[c] *= eta;
    us.push_back(std::move(gen.u));
    etas.push_back(eta);
    ds.push_back(std::move(d));
  }
  EquiChainResult chain = equi_chain(us, etas, p, eps);
  json out{{"p", chain.p},
           {"q", chain.q},
           {"eps", chain.eps},
           {"t_eps", chain.t_eps},
           {"l_eps", chain.l_eps},
           {"m", chain.m},
           {"z_tails", chain.z_tails},
           {"sup_tail", chain.sup_tail}};
  if (!profile_path.empty()) {
    std::vector<double> levels;
    for (int i = -30; i <= 30; ++i) levels.push_back(std::pow(10.0, i / 10.0));
    auto prof = equi_profile(ds, p, levels);
    std::string csv = "level,tail\n";
    for (const auto& pt : prof) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", pt.level, pt.tail);
      csv += buf;
    }
    write_text(profile_path, csv);
    out["profile"] = profile_path;
  }
  print_json(out);
  return 0;
}

int cmd_experiment(const std::string& config_path, std::uint64_t seed, bool seed_set,
                   const std::string& outdir, bool record, bool assert_mode, double band,
                   const std::vector<std::string>& formats) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) fail_input("experiment: cannot open config " + config_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail_input("experiment: bad config json in " + config_path + " (" + e.what() + ")");
  }
  ExperimentConfig cfg = config_from_json(j);
  if (seed_set) cfg.seed = seed;
  if (!outdir.empty()) cfg.outdir = outdir;
  if (record) cfg.fixture_mode = "record";
  if (assert_mode) cfg.fixture_mode = "assert";
  if (band > 0.0) cfg.fixture_band = band;
  ConstantReport rep = run_experiment(cfg);
  auto written = emit_report(rep, formats, cfg.outdir);
  json out{{"rows", rep.rows.size()}, {"aggregates", rep.aggregates}, {"written", written}};
  print_json(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for mixed-growth Korn and rigidity decompositions"};
  app.require_subcommand(1);

  DomainFlags df;
  NoiseFlags nf;
  std::uint64_t seed = 1;
  double p = 1.5, q = 3.0;
  std::string exponents = "1.5,3";
  std::string outdir;
  std::string save_path;
  std::string profile_path;
  double lambda = 0.0;
  double chart_radius = 0.0;
  double eps = 0.1;
  int count = 6;
  bool lipschitz = false;

  auto* cdist = app.add_subcommand("dist", "distance-to-rotations statistics of a seeded field");
  add_domain_flags(cdist, df);
  add_noise_flags(cdist, nf);
  cdist->add_option("--seed", seed, "generator seed");
  cdist->add_option("--p", p, "norm exponent");
  cdist->add_option("--save-field", save_path, "write the displacement as .gfld");

  auto* ckorn = app.add_subcommand("korn", "mixed-growth Korn decomposition");
  add_domain_flags(ckorn, df);
  add_noise_flags(ckorn, nf);
  ckorn->add_option("--seed", seed, "generator seed");
  ckorn->add_option("--exponents", exponents, "comma-separated exponent list");
  ckorn->add_option("--out", outdir, "directory for part dumps");

  auto* crig = app.add_subcommand("rigidity", "mixed-growth rigidity decomposition");
  add_domain_flags(crig, df);
  add_noise_flags(crig, nf);
  crig->add_option("--seed", seed, "generator seed");
  crig->add_option("--exponents", exponents, "comma-separated exponent list");
  crig->add_flag("--lipschitz", lipschitz, "use the bounded-gradient pipeline");
  crig->add_option("--out", outdir, "directory for part dumps");

  auto* cext = app.add_subcommand("extend", "boundary extension on the graph half-ball");
  add_domain_flags(cext, df);
  add_noise_flags(cext, nf);
  cext->add_option("--seed", seed, "generator seed");
  cext->add_option("--p", p, "low exponent");
  cext->add_option("--q", q, "high exponent");
  cext->add_option("--chart-radius", chart_radius, "chart ball radius (default 0.45 size)");

  auto* ctr = app.add_subcommand("truncate", "Lipschitz truncation of a seeded field");
  add_domain_flags(ctr, df);
  add_noise_flags(ctr, nf);
  ctr->add_option("--seed", seed, "generator seed");
  ctr->add_option("--lambda", lambda, "level (default 2n)");

  auto* clor = app.add_subcommand("lorentz", "Lorentz norms of the distance field");
  add_domain_flags(clor, df);
  add_noise_flags(clor, nf);
  clor->add_option("--seed", seed, "generator seed");
  clor->add_option("--p", p, "primary exponent");
  clor->add_option("--q", q, "secondary exponent");
  clor->add_option("--profile", profile_path, "write the K-functional profile CSV here");

  auto* ceq = app.add_subcommand("equi", "equiintegrability transfer along a sequence");
  add_domain_flags(ceq, df);
  add_noise_flags(ceq, nf);
  ceq->add_option("--seed", seed, "generator seed");
  ceq->add_option("--p", p, "tail exponent");
  ceq->add_option("--eps", eps, "target tail level");
  ceq->add_option("--count", count, "sequence length");
  ceq->add_option("--profile", profile_path, "write the tail profile CSV here");

  std::string config_path;
  bool record = false;
  bool assert_mode = false;
  double band = 0.0;
  std::vector<std::string> formats{"csv", "json", "svg"};
  auto* cexp = app.add_subcommand("experiment", "ensemble run from a JSON config");
  auto* copt = cexp->add_option("--config", config_path, "experiment config JSON");
  copt->required();
  auto* seed_opt = cexp->add_option("--seed", seed, "override the config seed");
  cexp->add_option("--out", outdir, "override the output directory");
  cexp->add_flag("--record-fixtures", record, "force fixture recording");
  cexp->add_flag("--assert-fixtures", assert_mode, "force fixture assertion");
  cexp->add_option("--band", band, "fixture tolerance band (1.0 exact, 1.05 cross-platform)");
  cexp->add_option("--format", formats, "report formats: csv, json, svg");

  try {
    app.parse(argc, argv);
    if (cdist->parsed()) return cmd_dist(df, nf, seed, p, save_path);
    if (ckorn->parsed()) return cmd_korn(df, nf, seed, exponents, outdir);
    if (crig->parsed()) return cmd_rigidity(df, nf, seed, exponents, lipschitz, outdir);
    if (cext->parsed()) return cmd_extend(df, nf, seed, p, q, chart_radius);
    if (ctr->parsed()) return cmd_truncate(df, nf, seed, lambda);
    if (clor->parsed()) return cmd_lorentz(df, nf, seed, p, q, profile_path);
    if (ceq->parsed()) return cmd_equi(df, nf, seed, p, eps, count, profile_path);
    if (cexp->parsed())
      return cmd_experiment(config_path, seed, seed_opt->count() > 0, outdir, record,
                            assert_mode, band, formats);
    return 0;
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  } catch (const rigidlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
