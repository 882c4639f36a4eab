#include "rigidlab/lab.hpp"

#include "rigidlab/calculus.hpp"
#include "rigidlab/korn.hpp"
#include "rigidlab/rigidity.hpp"
#include "rigidlab/rotations.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace rigidlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt17(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string fmt6(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

MatN plane_rotation(int n, int i, int j, double a) {
  MatN q = identity_mat(n);
  q(i, i) = std::cos(a);
  q(j, j) = std::cos(a);
  q(i, j) = -std::sin(a);
  q(j, i) = std::sin(a);
  return q;
}

MatN base_matrix(const NoiseModel& m, int n, MajorantTarget target) {
  if (target == MajorantTarget::rotation) {
    MatN q = plane_rotation(n, 0, 1, m.base_angle);
    if (n == 3)
      q = MatN(plane_rotation(n, 1, 2, 0.7 * m.base_angle) * q *
               plane_rotation(n, 0, 2, 0.3 * m.base_angle));
    return q;
  }
  MatN s = zero_mat(n);
  s(0, 1) = -m.base_angle;
  s(1, 0) = m.base_angle;
  if (n == 3) {
    s(1, 2) = -0.7 * m.base_angle;
    s(2, 1) = 0.7 * m.base_angle;
    s(0, 2) = 0.3 * m.base_angle;
    s(2, 0) = -0.3 * m.base_angle;
  }
  return s;
}

[[noreturn]] void fail_by_code(ErrorCode code, const std::string& msg) {
  switch (code) {
    case ErrorCode::input: fail_input(msg);
    case ErrorCode::fixture: fail_fixture(msg);
    default: fail_contract(msg);
  }
}

std::string branch_trace(const RunRow& row) {
  std::string t = row.branch;
  if (row.telemetry.contains("levels"))
    for (const auto& lv : row.telemetry.at("levels")) t += "/" + lv.value("branch", std::string());
  return t;
}

}  // namespace

NoiseModel noise_from_json(const nlohmann::json& j) {
  NoiseModel m;
  m.base_angle = j.value("base_angle", m.base_angle);
  if (j.contains("base_shift")) {
    auto v = j.at("base_shift").get<std::vector<double>>();
    if (v.size() > 3) fail_input("noise model: base_shift takes at most three entries");
    m.base_shift = {0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < v.size(); ++a) m.base_shift[a] = v[a];
  }
  m.tail_amplitude = j.value("tail_amplitude", m.tail_amplitude);
  m.tail_exponent = j.value("tail_exponent", m.tail_exponent);
  m.part_amplitude = j.value("part_amplitude", m.part_amplitude);
  m.spike_density = j.value("spike_density", m.spike_density);
  return m;
}

nlohmann::json noise_to_json(const NoiseModel& m) {
  return {{"base_angle", m.base_angle},
          {"base_shift", {m.base_shift[0], m.base_shift[1], m.base_shift[2]}},
          {"tail_amplitude", m.tail_amplitude},
          {"tail_exponent", m.tail_exponent},
          {"part_amplitude", m.part_amplitude},
          {"spike_density", m.spike_density}};
}

GeneratedField generate_field(const NoiseModel& model, std::uint64_t seed,
                              const std::shared_ptr<const GridDomain>& dom_sp, std::size_t nslots,
                              MajorantTarget target) {
  if (!dom_sp) fail_input("generate_field: null domain");
  if (nslots == 0) fail_input("generate_field: need at least one majorant slot");
  if (!(model.tail_amplitude >= 0.0) || !(model.part_amplitude >= 0.0) ||
      !(model.spike_density >= 0.0) || model.spike_density > 1.0 || !(model.tail_exponent > 0.0))
    fail_input("generate_field: noise model out of range");
  const GridDomain& dom = *dom_sp;
  const int n = dom.dim;
  const double h = dom.spacing;
  const auto cells = dom.inside_cells();

  double extent = 0.0;
  for (int a = 0; a < n; ++a) extent = std::max(extent, dom.shape[a] * h);

  std::vector<VectorField> pieces;
  for (std::size_t k = 0; k < nslots; ++k) pieces.emplace_back(dom_sp);
  std::size_t spike_total = 0;

  // Sparse bumps with Pareto amplitudes: compressive mass for the
  // low-exponent slot. The cap keeps |Du| representable without losing the
  // heavy tail that drives the truncation path.
  auto add_spikes = [&](VectorField& piece, const std::string& label, double amplitude) {
    if (amplitude <= 0.0 || model.spike_density <= 0.0) return;
    Rng rng(seed, label);
    for (auto c : cells) {
      if (rng.uniform() >= model.spike_density) continue;
      ++spike_total;
      VecN xc = dom.cell_center(c);
      for (int a = 0; a < n; ++a) xc[a] += h * (rng.uniform() - 0.5);
      double r = h * (2.0 + 2.0 * rng.uniform());
      VecN dir(n);
      double dn = 0.0;
      do {
        for (int a = 0; a < n; ++a) dir[a] = rng.normal();
        dn = dir.norm();
      } while (dn < 1e-12);
      dir /= dn;
      double heavy =
          std::min(std::pow(std::max(rng.uniform(), 1e-9), -1.0 / model.tail_exponent), 50.0);
      double amp = amplitude * heavy;
      int lo[3] = {0, 0, 0};
      int hi[3] = {0, 0, 0};
      for (int a = 0; a < n; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor((xc[a] - r - dom.origin[a]) / h)));
        hi[a] = std::min(dom.shape[a] - 1,
                         static_cast<int>(std::ceil((xc[a] + r - dom.origin[a]) / h)));
      }
      for (int i = lo[0]; i <= hi[0]; ++i)
        for (int j = lo[1]; j <= hi[1]; ++j)
          for (int k2 = lo[2]; k2 <= hi[2]; ++k2) {
            std::uint32_t cc = dom.index(i, j, k2);
            double s = (dom.cell_center(cc) - xc).norm() / r;
            if (s >= 1.0) continue;
            double w = std::pow(1.0 - s * s, 3.0);
            piece.set(cc, VecN(piece.get(cc) + amp * w * dir));
          }
    }
  };

  // Low-frequency oscillation: diffuse mass for the high-exponent slot.
  auto add_modes = [&](VectorField& piece, const std::string& label, double amplitude) {
    if (amplitude <= 0.0) return;
    Rng rng(seed, label);
    const int nm = 5;
    for (int mode = 0; mode < nm; ++mode) {
      VecN kv(n);
      for (int a = 0; a < n; ++a) {
        double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        kv[a] = sign * rng.uniform_int(1, 3) * kPi / std::max(extent, 1e-12);
      }
      double phase = rng.uniform(0.0, 2.0 * kPi);
      VecN dir(n);
      double dn = 0.0;
      do {
        for (int a = 0; a < n; ++a) dir[a] = rng.normal();
        dn = dir.norm();
      } while (dn < 1e-12);
      dir /= dn;
      double amp = amplitude / nm;
      for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
        double v = amp * std::sin(kv.dot(dom.cell_center(c)) + phase);
        piece.set(c, VecN(piece.get(c) + v * dir));
      }
    }
  };

  for (std::size_t k = 0; k + 1 < nslots; ++k)
    add_spikes(pieces[k], "spikes-" + std::to_string(k),
               model.tail_amplitude * std::pow(0.5, static_cast<double>(k)));
  if (nslots == 1) {
    add_spikes(pieces[0], "spikes-0", model.tail_amplitude);
    add_modes(pieces[0], "modes", model.part_amplitude);
  } else {
    add_modes(pieces[nslots - 1], "modes", model.part_amplitude);
  }

  MatN base = base_matrix(model, n, target);
  VecN shift(n);
  for (int a = 0; a < n; ++a) shift[a] = model.base_shift[a];

  VectorField u(dom_sp);
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    VecN x = dom.cell_center(c);
    VecN per(n);
    per.setZero();
    for (const auto& piece : pieces) per += piece.get(c);
    VecN val = target == MajorantTarget::rotation ? VecN(base * (x + per) + shift)
                                                  : VecN(base * x + per + shift);
    u.set(c, val);
  }

  MatrixField du = gradient(u);
  ScalarField d(dom_sp);
  if (target == MajorantTarget::rotation) {
    d = dist_field(du);
  } else {
    for (auto c : cells) {
      MatN g = du.get(c);
      d[c] = MatN(0.5 * (g + g.transpose())).norm();
    }
  }

  // Split the measured defect by each piece's own derivative magnitude so
  // the slots mirror the noise structure and the sum closes cell by cell.
  std::vector<ScalarField> w;
  for (std::size_t k = 0; k < nslots; ++k) {
    MatrixField dp = gradient(pieces[k]);
    ScalarField wk(dom_sp);
    for (auto c : cells) {
      MatN g = dp.get(c);
      wk[c] = target == MajorantTarget::rotation ? g.norm()
                                                 : MatN(0.5 * (g + g.transpose())).norm();
    }
    w.push_back(std::move(wk));
  }

  std::vector<ScalarField> maj;
  for (std::size_t k = 0; k < nslots; ++k) maj.emplace_back(dom_sp);
  for (auto c : cells) {
    double tot_w = 0.0;
    for (const auto& wk : w) tot_w += wk[c];
    double rem = d[c];
    if (nslots > 1) {
      if (tot_w > 0.0) {
        for (std::size_t k = 0; k + 1 < nslots; ++k) {
          double share = std::min(d[c] * (w[k][c] / tot_w), rem);
          maj[k][c] = share;
          rem -= share;
        }
      } else {
        // pure differencing noise: keep the high-exponent slots exactly zero
        maj[0][c] = rem;
        rem = 0.0;
      }
    }
    // close the sum from below despite rounding, same summation order as the
    // certificate below
    double partial = 0.0;
    for (std::size_t k = 0; k + 1 < nslots; ++k) partial += maj[k][c];
    double last = std::max(rem, 0.0);
    while (partial + last < d[c]) last = std::nextafter(last, kInf);
    maj[nslots - 1][c] = last;
  }

  double margin = cells.empty() ? 0.0 : kInf;
  for (auto c : cells) {
    double tot = 0.0;
    for (const auto& mk : maj) tot += mk[c];
    if (tot < d[c])
      fail_contract("generate_field: majorant certificate failed at cell " + std::to_string(c));
    margin = std::min(margin, tot - d[c]);
  }

  double sup_du = 0.0;
  double dsup = 0.0;
  for (auto c : cells) {
    sup_du = std::max(sup_du, du.get(c).norm());
    dsup = std::max(dsup, d[c]);
  }

  GeneratedField out{std::move(u), std::move(maj), base, nlohmann::json::object()};
  out.stats["spikes"] = spike_total;
  out.stats["sup_du"] = sup_du;
  out.stats["defect_sup"] = dsup;
  out.stats["margin"] = margin;
  out.stats["target"] = target == MajorantTarget::rotation ? "rotation" : "symmetric";
  return out;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.kind = j.value("kind", c.kind);
  c.size = j.value("size", c.size);
  c.lipschitz_l = j.value("lipschitz_l", c.lipschitz_l);
  c.dim = j.value("dim", c.dim);
  if (j.contains("resolutions"))
    c.resolutions = j.at("resolutions").get<std::vector<int>>();
  else if (j.contains("resolution"))
    c.resolutions = {j.at("resolution").get<int>()};
  if (j.contains("exponents")) c.exponents = j.at("exponents").get<std::vector<double>>();
  c.pipeline = j.value("pipeline", c.pipeline);
  c.ensemble = j.value("ensemble", c.ensemble);
  if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
  c.seed = j.value("seed", c.seed);
  c.outdir = j.value("outdir", c.outdir);
  c.fixture_mode = j.value("fixture_mode", c.fixture_mode);
  c.fixture_path = j.value("fixture_path", c.fixture_path);
  c.fixture_band = j.value("fixture_band", c.fixture_band);
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return {{"kind", c.kind},
          {"size", c.size},
          {"lipschitz_l", c.lipschitz_l},
          {"dim", c.dim},
          {"resolutions", c.resolutions},
          {"exponents", c.exponents},
          {"pipeline", c.pipeline},
          {"ensemble", c.ensemble},
          {"noise", noise_to_json(c.noise)},
          {"seed", c.seed},
          {"outdir", c.outdir},
          {"fixture_mode", c.fixture_mode},
          {"fixture_path", c.fixture_path},
          {"fixture_band", c.fixture_band}};
}

ConstantReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.ensemble < 1) fail_input("experiment: ensemble size must be at least 1");
  if (cfg.resolutions.empty()) fail_input("experiment: need at least one resolution");
  if (cfg.pipeline != "korn" && cfg.pipeline != "rigidity" && cfg.pipeline != "lipschitz")
    fail_input("experiment: unknown pipeline '" + cfg.pipeline + "'");
  if (cfg.fixture_mode != "record" && cfg.fixture_mode != "assert")
    fail_input("experiment: fixture mode must be 'record' or 'assert'");
  if (!(cfg.fixture_band >= 1.0)) fail_input("experiment: fixture band must be >= 1");
  ExponentList exps(cfg.exponents);
  const std::size_t kk = exps.size();
  if (cfg.pipeline == "lipschitz" && kk != 2)
    fail_input("experiment: the lipschitz pipeline takes exactly two exponents");
  const MajorantTarget target =
      cfg.pipeline == "korn" ? MajorantTarget::symmetric : MajorantTarget::rotation;

  ConstantReport rep;
  rep.config = config_to_json(cfg);

  for (int res : cfg.resolutions) {
    auto dom = make_domain(cfg.kind, cfg.size, res, cfg.lipschitz_l, cfg.dim);
    std::vector<RunRow> rows(cfg.ensemble);
    std::vector<std::string> errs(cfg.ensemble);
    std::vector<int> codes(cfg.ensemble, 0);
    std::atomic<int> next{0};

    auto work = [&]() {
      for (;;) {
        int k = next.fetch_add(1);
        if (k >= cfg.ensemble) return;
        std::uint64_t rseed = cfg.seed + static_cast<std::uint64_t>(k);
        try {
          GeneratedField gen = generate_field(cfg.noise, rseed, dom, kk, target);
          RunRow row;
          row.seed = rseed;
          row.resolution = res;
          if (cfg.pipeline == "korn") {
            MixedDecomposition md =
                kk == 2 ? korn_mixed(gen.u, gen.majorants[0], gen.majorants[1], exps[0], exps[1])
                        : korn_multi(gen.u, gen.majorants, exps);
            row.ratios = md.ratios;
            row.branch = md.telemetry.value("branch", std::string());
            row.reconstruction = md.telemetry.value("reconstruction_sup", 0.0);
            row.recovery = (md.constant - gen.base).norm();
            row.telemetry = std::move(md.telemetry);
          } else {
            auto run_rig = [&]() {
              if (cfg.pipeline == "rigidity")
                return kk == 2 ? rigidity_mixed(gen.u, gen.majorants[0], gen.majorants[1],
                                                exps[0], exps[1])
                               : rigidity_multi(gen.u, gen.majorants, exps);
              double m = gen.stats.value("sup_du", 0.0) * (1.0 + 1e-12) + 1e-9;
              return rigidity_lipschitz(gen.u, gen.majorants[0], gen.majorants[1], exps[0],
                                        exps[1], m);
            };
            RigidityResult rr = run_rig();
            row.ratios = rr.ratios;
            row.branch = rr.telemetry.value("branch", std::string());
            row.reconstruction = rr.telemetry.value("reconstruction_sup", 0.0);
            row.recovery = (rr.q - gen.base).norm();
            row.telemetry = std::move(rr.telemetry);
          }
          row.telemetry["generator"] = gen.stats;
          rows[k] = std::move(row);
        } catch (const Error& e) {
          errs[k] = e.what();
          codes[k] = static_cast<int>(e.code());
        } catch (const std::exception& e) {
          errs[k] = e.what();
          codes[k] = static_cast<int>(ErrorCode::contract);
        }
      }
    };

    unsigned hw = std::thread::hardware_concurrency();
    unsigned nthreads = std::min(std::min(hw == 0 ? 1u : hw, 8u),
                                 static_cast<unsigned>(cfg.ensemble));
    if (nthreads <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }

    std::string combined;
    int code = 0;
    for (int k = 0; k < cfg.ensemble; ++k) {
      if (!codes[k]) continue;
      if (code == 0) code = codes[k];
      if (!combined.empty()) combined += "; ";
      combined += "seed " + std::to_string(cfg.seed + static_cast<std::uint64_t>(k)) +
                  " resolution " + std::to_string(res) + ": " + errs[k];
    }
    if (code) fail_by_code(static_cast<ErrorCode>(code), "experiment runs failed: " + combined);
    for (auto& r : rows) rep.rows.push_back(std::move(r));
  }

  nlohmann::json per_res = nlohmann::json::object();
  std::map<int, std::vector<std::vector<double>>> by_res;
  for (const auto& row : rep.rows) {
    auto& v = by_res[row.resolution];
    v.resize(kk);
    for (std::size_t a = 0; a < kk && a < row.ratios.size(); ++a) v[a].push_back(row.ratios[a]);
  }
  std::map<int, std::vector<double>> max_by_res;
  for (auto& [res, lists] : by_res) {
    std::vector<double> mx(kk, 0.0);
    std::vector<double> med(kk, 0.0);
    for (std::size_t a = 0; a < kk; ++a) {
      auto vals = lists[a];
      if (vals.empty()) continue;
      mx[a] = *std::max_element(vals.begin(), vals.end());
      std::sort(vals.begin(), vals.end());
      med[a] = vals.size() % 2 ? vals[vals.size() / 2]
                               : 0.5 * (vals[vals.size() / 2 - 1] + vals[vals.size() / 2]);
    }
    per_res[std::to_string(res)] = {{"max", mx}, {"median", med}};
    max_by_res[res] = mx;
  }
  rep.aggregates["per_resolution"] = per_res;

  nlohmann::json deltas = nlohmann::json::object();
  for (std::size_t i = 0; i + 1 < cfg.resolutions.size(); ++i) {
    int r0 = cfg.resolutions[i];
    int r1 = cfg.resolutions[i + 1];
    if (!max_by_res.count(r0) || !max_by_res.count(r1)) continue;
    std::vector<double> dl(kk, 0.0);
    for (std::size_t a = 0; a < kk; ++a) {
      double m0 = max_by_res[r0][a];
      double m1 = max_by_res[r1][a];
      dl[a] = std::abs(m1 - m0) / std::max(m0, 1e-12);
    }
    deltas[std::to_string(r0) + "->" + std::to_string(r1)] = dl;
  }
  rep.aggregates["refinement_deltas"] = deltas;

  const std::string fxpath =
      cfg.fixture_path.empty()
          ? (cfg.outdir.empty() ? std::string(".") : cfg.outdir) + "/fixture.json"
          : cfg.fixture_path;
  nlohmann::json fxmeta = {
      {"mode", cfg.fixture_mode}, {"path", fxpath}, {"band", cfg.fixture_band}};
  if (cfg.fixture_mode == "record") {
    nlohmann::json fx;
    fx["pipeline"] = cfg.pipeline;
    fx["kind"] = cfg.kind;
    fx["dim"] = cfg.dim;
    fx["exponents"] = cfg.exponents;
    fx["seed"] = cfg.seed;
    fx["ensemble"] = cfg.ensemble;
    nlohmann::json mr = nlohmann::json::object();
    for (const auto& [res, mx] : max_by_res) mr[std::to_string(res)] = mx;
    fx["max_ratios"] = mr;
    std::filesystem::path fp(fxpath);
    if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path());
    std::ofstream out(fp, std::ios::binary);
    if (!out) fail_input("experiment: cannot write fixture file " + fxpath);
    out << fx.dump(2) << "\n";
    out.flush();
    if (!out.good()) fail_input("experiment: short write to fixture file " + fxpath);
    fxmeta["verdict"] = "recorded";
  } else {
    std::ifstream in(fxpath, std::ios::binary);
    if (!in) fail_fixture("fixture file missing: " + fxpath);
    nlohmann::json fx;
    try {
      in >> fx;
    } catch (const std::exception& e) {
      fail_fixture("fixture file unreadable: " + fxpath + " (" + e.what() + ")");
    }
    if (fx.value("pipeline", std::string()) != cfg.pipeline ||
        fx.value("kind", std::string()) != cfg.kind ||
        fx.value("exponents", std::vector<double>()) != cfg.exponents)
      fail_fixture("fixture incompatible with config: " + fxpath);
    for (const auto& row : rep.rows) {
      std::string rk = std::to_string(row.resolution);
      if (!fx.at("max_ratios").contains(rk))
        fail_fixture("fixture has no entry for resolution " + rk + ": " + fxpath);
      auto limits = fx.at("max_ratios").at(rk).get<std::vector<double>>();
      for (std::size_t a = 0; a < kk && a < row.ratios.size(); ++a) {
        double lim = limits.at(a) * cfg.fixture_band + 1e-15;
        if (row.ratios[a] > lim)
          fail_fixture("fixture exceeded: seed " + std::to_string(row.seed) + " resolution " +
                       rk + " slot " + std::to_string(a) + " ratio " + fmt6(row.ratios[a]) +
                       " > limit " + fmt6(lim) + " branch " + branch_trace(row) +
                       "; replay with this config and seed " + std::to_string(row.seed));
      }
    }
    fxmeta["verdict"] = "pass";
  }
  rep.aggregates["fixture"] = fxmeta;
  return rep;
}

nlohmann::json report_to_json(const ConstantReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"seed", r.seed},
                    {"resolution", r.resolution},
                    {"branch", r.branch},
                    {"ratios", r.ratios},
                    {"reconstruction", r.reconstruction},
                    {"recovery", r.recovery},
                    {"telemetry", r.telemetry}});
  return {{"config", rep.config}, {"rows", rows}, {"aggregates", rep.aggregates}};
}

std::string report_to_csv(const ConstantReport& rep) {
  std::size_t kk = 0;
  if (rep.config.contains("exponents")) kk = rep.config.at("exponents").size();
  for (const auto& r : rep.rows) kk = std::max(kk, r.ratios.size());
  std::string out = "seed,resolution,branch,recovery,reconstruction";
  for (std::size_t a = 0; a < kk; ++a) out += ",ratio_" + std::to_string(a);
  out += "\n";
  for (const auto& r : rep.rows) {
    out += std::to_string(r.seed) + "," + std::to_string(r.resolution) + "," + r.branch + "," +
           fmt17(r.recovery) + "," + fmt17(r.reconstruction);
    for (std::size_t a = 0; a < kk; ++a) {
      out += ",";
      if (a < r.ratios.size()) out += fmt17(r.ratios[a]);
    }
    out += "\n";
  }
  return out;
}

std::string report_to_svg(const ConstantReport& rep) {
  std::vector<int> resv;
  if (rep.config.contains("resolutions"))
    resv = rep.config.at("resolutions").get<std::vector<int>>();
  std::map<int, std::vector<double>> mx;
  std::size_t kk = 0;
  if (rep.config.contains("exponents")) kk = rep.config.at("exponents").size();
  for (const auto& r : rep.rows) {
    kk = std::max(kk, r.ratios.size());
    if (std::find(resv.begin(), resv.end(), r.resolution) == resv.end())
      resv.push_back(r.resolution);
  }
  for (const auto& r : rep.rows) {
    auto& v = mx[r.resolution];
    v.resize(kk, 0.0);
    for (std::size_t a = 0; a < r.ratios.size(); ++a) v[a] = std::max(v[a], r.ratios[a]);
  }
  double ymax = 1e-12;
  for (const auto& [res, v] : mx)
    for (double x : v) ymax = std::max(ymax, x);
  ymax *= 1.1;

  const double wpx = 640.0;
  const double hpx = 400.0;
  const double ml = 70.0;
  const double mr = 20.0;
  const double mt = 40.0;
  const double mb = 50.0;
  auto xpos = [&](std::size_t i) {
    if (resv.size() <= 1) return ml + (wpx - ml - mr) / 2.0;
    return ml + (wpx - ml - mr) * static_cast<double>(i) / static_cast<double>(resv.size() - 1);
  };
  auto ypos = [&](double v) { return hpx - mb - (hpx - mt - mb) * (v / ymax); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\">\n";
  s += "<title>norm-control ratios by resolution</title>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"#ffffff\"/>\n";
  s += "<line x1=\"" + fmt6(ml) + "\" y1=\"" + fmt6(hpx - mb) + "\" x2=\"" + fmt6(wpx - mr) +
       "\" y2=\"" + fmt6(hpx - mb) + "\" stroke=\"#000000\"/>\n";
  s += "<line x1=\"" + fmt6(ml) + "\" y1=\"" + fmt6(mt) + "\" x2=\"" + fmt6(ml) + "\" y2=\"" +
       fmt6(hpx - mb) + "\" stroke=\"#000000\"/>\n";
  for (double frac : {0.0, 0.5, 1.0}) {
    double v = frac * ymax;
    s += "<text x=\"" + fmt6(ml - 6.0) + "\" y=\"" + fmt6(ypos(v) + 4.0) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fmt6(v) + "</text>\n";
  }
  for (std::size_t i = 0; i < resv.size(); ++i)
    s += "<text x=\"" + fmt6(xpos(i)) + "\" y=\"" + fmt6(hpx - mb + 18.0) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + std::to_string(resv[i]) + "</text>\n";
  s += "<text x=\"" + fmt6((ml + wpx - mr) / 2.0) + "\" y=\"" + fmt6(hpx - 12.0) +
       "\" text-anchor=\"middle\" font-size=\"12\">resolution</text>\n";
  s += "<text x=\"18\" y=\"" + fmt6((mt + hpx - mb) / 2.0) +
       "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " +
       fmt6((mt + hpx - mb) / 2.0) + ")\">max ratio</text>\n";

  for (std::size_t a = 0; a < kk; ++a) {
    const char* color = palette[a % 6];
    std::string pts;
    for (std::size_t i = 0; i < resv.size(); ++i) {
      auto it = mx.find(resv[i]);
      if (it == mx.end()) continue;
      if (!pts.empty()) pts += " ";
      pts += fmt6(xpos(i)) + "," + fmt6(ypos(it->second[a]));
    }
    if (!pts.empty())
      s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt6(ml + 8.0 + 90.0 * static_cast<double>(a)) + "\" y=\"" +
         fmt6(mt - 14.0) + "\" font-size=\"12\" fill=\"" + color + "\">slot " +
         std::to_string(a) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::string> emit_report(const ConstantReport& rep,
                                     const std::vector<std::string>& formats,
                                     const std::string& outdir) {
  const std::string dir = outdir.empty() ? "." : outdir;
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& f : formats) {
    std::string body;
    if (f == "csv")
      body = report_to_csv(rep);
    else if (f == "json")
      body = report_to_json(rep).dump(2) + "\n";
    else if (f == "svg")
      body = report_to_svg(rep);
    else
      fail_input("emit_report: unknown format '" + f + "'");
    std::string path = dir + "/report." + f;
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_input("emit_report: cannot write " + path);
    out << body;
    out.flush();
    if (!out.good()) fail_input("emit_report: short write to " + path);
    written.push_back(path);
  }
  return written;
}

}  // namespace rigidlab
