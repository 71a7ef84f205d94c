#include "rigidity/experiment.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rigidity/circle.hpp"
#include "rigidity/conjugacy.hpp"
#include "rigidity/dynamics.hpp"
#include "rigidity/leaves.hpp"
#include "rigidity/linear_models.hpp"
#include "rigidity/regularity.hpp"
#include "rigidity/surd.hpp"

namespace rigidity {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- config

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& field,
                         const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (node.IsDefined()) os << ":" << node.Mark().line + 1;
    os << ": field '" << field << "': " << message;
    throw Error(ErrorCode::ConfigError, os.str());
  }

  template <class T>
  T get(const YAML::Node& node, const std::string& field, const char* what) const {
    if (!node.IsScalar()) fail(node, field, std::string("expected ") + what);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, field, std::string("expected ") + what + ", got '" + node.Scalar() + "'");
    }
  }

  double real(const YAML::Node& node, const std::string& field) const {
    const double v = get<double>(node, field, "a real number");
    if (!std::isfinite(v)) fail(node, field, "must be finite");
    return v;
  }

  std::int64_t integer(const YAML::Node& node, const std::string& field) const {
    return get<std::int64_t>(node, field, "an integer");
  }

  Vec2 pair(const YAML::Node& node, const std::string& field) const {
    if (!node.IsSequence() || node.size() != 2) fail(node, field, "expected a list of two reals");
    return {real(node[0], field + "[0]"), real(node[1], field + "[1]")};
  }

  void keys(const YAML::Node& node, const std::string& field,
            const std::set<std::string>& allowed) const {
    if (!node.IsMap()) fail(node, field, "expected a mapping");
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
      }
    }
  }

 private:
  std::string source_;
};

json vec(const Vec2& v) { return json::array({v.x, v.y}); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string hex(const unsigned char* data, unsigned len) {
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  }
  return os.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

// Rethrows library errors prefixed with the module that raised them.
constexpr const char* kModules[] = {"linear-models",   "anosov-map",       "dynamics-core",
                                    "conjugacy",       "leaves-holonomy",  "circle-reduction",
                                    "regularity-estimators"};

template <class F>
auto in_module(const char* module, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    std::string msg = e.what();
    const std::string code = std::string(to_string(e.code())) + ": ";
    if (msg.rfind(code, 0) == 0) msg.erase(0, code.size());
    for (const char* m : kModules) {
      if (msg.rfind(std::string(m) + ": ", 0) == 0) throw;
    }
    throw Error(e.code(), std::string(module) + ": " + msg);
  }
}

// ---------------------------------------------------------------- pipeline

// Lazily built objects shared by the sections of one run.
class Pipeline {
 public:
  explicit Pipeline(const ExperimentConfig& c) : cfg(c), f(c.map()) {}

  const ExperimentConfig& cfg;
  PerturbedMap f;

  const ConeCertificate& certificate() {
    if (!cert_) cert_ = in_module("anosov-map", [&] { return verify_anosov(f); });
    return *cert_;
  }

  const ConjugacySolution& forward() {
    if (!fwd_) {
      certificate();
      fwd_ = in_module("conjugacy", [&] { return solve_conjugacy(f, cfg.grid, cfg.conjugacy_tol); });
    }
    return *fwd_;
  }

  const ConjugacySolution& inverse() {
    if (!inv_) {
      certificate();
      inv_ = in_module("conjugacy",
                       [&] { return solve_inverse_conjugacy(f, cfg.grid, cfg.conjugacy_tol); });
    }
    return *inv_;
  }

  const ConjugacyMap& h() {
    if (!h_) h_ = std::make_shared<ConjugacyMap>(f, forward().field, inverse().field);
    return *h_;
  }

  const LeafContext& leaves() {
    if (!ctx_) ctx_ = in_module("leaves-holonomy", [&] { return make_leaf_context(h()); });
    return *ctx_;
  }

  const LeafCurve& origin_leaf() {
    if (!w_) {
      w_ = in_module("leaves-holonomy",
                     [&] { return integrate_leaf_window(leaves().unstable, {0, 0}, 3.0, 4.0); });
    }
    return *w_;
  }

 private:
  std::optional<ConeCertificate> cert_;
  std::optional<ConjugacySolution> fwd_;
  std::optional<ConjugacySolution> inv_;
  std::shared_ptr<ConjugacyMap> h_;
  std::optional<LeafContext> ctx_;
  std::optional<LeafCurve> w_;
};

struct Artifacts {
  bool enabled = false;
  std::filesystem::path dir;
  std::vector<std::string> files;

  std::filesystem::path add(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

struct Context {
  Pipeline& p;
  Artifacts& art;
  std::vector<std::string>& violations;

  void check(const std::string& what, double value, double tol) {
    if (!(value <= tol)) {
      std::ostringstream os;
      os << what << " = " << std::setprecision(3) << value << " exceeds " << tol;
      violations.push_back(os.str());
    }
  }
};

// ---------------------------------------------------------------- sections

json section_linear(Context& c) {
  const auto& a = c.p.f.linear();
  json j;
  const IMat2 m = a.imat2();
  j["matrix"] = json::array({json::array({m[0][0], m[0][1]}), json::array({m[1][0], m[1][1]})});
  j["determinant"] = a.determinant;
  j["mu_unstable"] = a.mu_unstable;
  j["mu_stable"] = a.mu_stable;
  j["e_unstable"] = vec(a.e_unstable);
  j["e_stable"] = vec(a.e_stable);
  j["lambda_u"] = a.unstable_log_volume;
  const QuadraticSurd alpha = in_module("linear-models", [&] { return linear_rotation_number(a); });
  const QuadraticSurd frac = alpha.fractional_part();
  const CFExpansion cf = surd_cf(frac);
  j["alpha"] = {{"surd", alpha.to_string()},
                {"value", alpha.value()},
                {"fractional", frac.to_string()},
                {"fractional_value", frac.value()},
                {"degree_two", is_degree_two(alpha)},
                {"cf_preperiod", cf.preperiod},
                {"cf_period", cf.period}};
  json counts = json::array();
  for (int n = 1; n <= c.p.cfg.max_period; ++n) {
    counts.push_back({{"n", n}, {"count", lattice_fixed_count(a, n)}});
  }
  j["fixed_counts"] = counts;
  return j;
}

json section_certificate(Context& c) {
  const ConeCertificate& k = c.p.certificate();
  return {{"certified", true},
          {"cone_half_width_unstable", k.cone_half_width_unstable},
          {"cone_half_width_stable", k.cone_half_width_stable},
          {"expansion_factor", k.expansion_factor},
          {"contraction_factor", k.contraction_factor},
          {"grid_resolution", k.grid_resolution},
          {"margin", k.margin},
          {"interpolation_bound", k.interpolation_bound},
          {"det_min", k.det_min},
          {"det_max", k.det_max}};
}

json stats_json(const SolveStats& s) {
  return {{"iterations", s.iterations},
          {"observed_ratio", s.observed_ratio},
          {"max_ratio", s.max_ratio},
          {"contraction_bound", s.contraction_bound},
          {"verification_resolution", s.verification_resolution},
          {"verification_residual", s.verification_residual},
          {"sup_updates", s.sup_updates}};
}

json section_conjugacy(Context& c) {
  const auto& fwd = c.p.forward();
  const auto& inv = c.p.inverse();
  const ConjugacyMap& h = c.p.h();
  json j;
  j["grid"] = c.p.cfg.grid;
  j["tolerance"] = c.p.cfg.conjugacy_tol;
  j["forward"] = stats_json(fwd.stats);
  j["forward"]["sup_norm"] = fwd.field.sup_norm();
  j["inverse"] = stats_json(inv.stats);
  j["inverse"]["sup_norm"] = inv.field.sup_norm();
  j["refinement_depth"] = h.depth();
  in_module("conjugacy", [&] {
    j["pointwise_residual"] = conjugacy_residual(h, 2000, c.p.cfg.seed);
    j["field_residual"] = field_residual(fwd.field, c.p.f, 2000, c.p.cfg.seed);
    std::mt19937_64 rng(c.p.cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec2 x0{u(rng), u(rng)};
    j["shadowing_defect"] = shadowing_defect(h, x0, 100);
    j["composition_residual"] = composition_residual(h, 64);
    j["h_at_origin"] = norm(h.displacement({0, 0}));
  });
  if (c.art.enabled) {
    save_field(fwd.field, c.art.add("forward.field"));
    save_field(inv.field, c.art.add("inverse.field"));
  }
  return j;
}

json section_periodic(Context& c) {
  const PerturbedMap& f = c.p.f;
  const auto& a = f.linear();
  c.p.certificate();
  const PeriodicDataReport r =
      in_module("dynamics-core", [&] { return periodic_data_report(f, c.p.cfg.max_period); });
  json j;
  j["lambda_u_linear"] = r.linear_exponent;
  j["max_abs_deviation"] = r.max_abs_deviation;
  json counts = json::array();
  bool all_match = true;
  for (int n = 1; n <= c.p.cfg.max_period; ++n) {
    const auto expected = lattice_fixed_count(a, n);
    const auto found = r.counts[static_cast<std::size_t>(n - 1)];
    all_match = all_match && expected == found;
    counts.push_back({{"n", n}, {"found", found}, {"lattice", expected}});
  }
  j["counts"] = counts;
  j["counts_match"] = all_match;
  // Independent exponent: stretching of a tangent vector along many periods.
  double cross = 0.0;
  json rows = json::array();
  std::ostringstream csv;
  csv << std::setprecision(17) << "period,x,y,key_x,key_y,prime_period,exponent,finite_time,deviation\n";
  in_module("dynamics-core", [&] {
    for (int n = 1; n <= c.p.cfg.max_period; ++n) {
      for (const auto& o : find_periodic_orbits(f, n)) {
        const double ft = lyapunov_unstable_finite_time(f, o);
        cross = std::max(cross, std::abs(ft - o.unstable_exponent));
        rows.push_back({{"period", n},
                        {"point", vec(o.base_point)},
                        {"cycle_key", vec(o.cycle_key)},
                        {"prime_period", o.prime_period},
                        {"exponent", o.unstable_exponent},
                        {"finite_time_exponent", ft},
                        {"deviation", o.unstable_exponent - r.linear_exponent}});
        csv << n << ',' << o.base_point.x << ',' << o.base_point.y << ',' << o.cycle_key.x << ','
            << o.cycle_key.y << ',' << o.prime_period << ',' << o.unstable_exponent << ',' << ft
            << ',' << o.unstable_exponent - r.linear_exponent << '\n';
      }
    }
  });
  j["max_exponent_cross_check"] = cross;
  j["rows"] = rows;
  if (c.art.enabled) write_file(c.art.add("periodic.csv"), csv.str());
  return j;
}

json section_holonomy(Context& c) {
  const LeafContext& ctx = c.p.leaves();
  const LeafCurve& w = c.p.origin_leaf();
  const ConjugacyMap& h = c.p.h();
  const auto& a = c.p.f.linear();
  const double tol = c.p.cfg.holonomy_tol;
  std::mt19937_64 rng(c.p.cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const IVec2 e1{1, 0}, e2{0, 1};
  const std::vector<IVec2> gens{e1, e2};
  double compose = 0.0, commute = 0.0, intertwine = 0.0;
  std::ostringstream p31;
  p31 << std::setprecision(17) << "s,x,y,compose,commute,intertwine\n";
  in_module("leaves-holonomy", [&] {
    for (int i = 0; i < c.p.cfg.holonomy_points; ++i) {
      const double s = -1.0 + 2.0 * unit(rng);
      const Vec2 x = w.point_at(s);
      const Vec2 hx = h.apply(x);
      std::vector<Vec2> single;
      for (const auto& n : gens) single.push_back(deck_action(ctx, n, x));
      double pc = 0.0, pm = 0.0, pi = 0.0;
      for (std::size_t k = 0; k < gens.size(); ++k) {
        const Vec2 lhs = h.apply(single[k]);
        pi = std::max(pi, norm(lhs - (hx + a.project_unstable(to_real(gens[k])))));
      }
      std::vector<Vec2> twice(4);
      for (std::size_t ni = 0; ni < 2; ++ni) {
        for (std::size_t mi = 0; mi < 2; ++mi) {
          twice[ni * 2 + mi] = deck_action(ctx, gens[ni], single[mi]);
        }
      }
      // T^n T^m vs T^{n+m}; the mixed pair also checks commutation.
      const Vec2 two_e1 = deck_action(ctx, {2, 0}, x);
      const Vec2 sum = deck_action(ctx, {1, 1}, x);
      const Vec2 two_e2 = deck_action(ctx, {0, 2}, x);
      pc = std::max({norm(twice[0] - two_e1), norm(twice[1] - sum), norm(twice[2] - sum),
                     norm(twice[3] - two_e2)});
      pm = norm(twice[1] - twice[2]);
      compose = std::max(compose, pc);
      commute = std::max(commute, pm);
      intertwine = std::max(intertwine, pi);
      p31 << s << ',' << x.x << ',' << x.y << ',' << pc << ',' << pm << ',' << pi << '\n';
    }
  });

  double cross = 0.0;
  std::ostringstream l22;
  l22 << std::setprecision(17) << "x_x,x_y,y_x,y_y,s,geometric_x,geometric_y,transport_x,transport_y\n";
  in_module("leaves-holonomy", [&] {
    for (int i = 0; i < c.p.cfg.holonomy_triples; ++i) {
      const Vec2 x{unit(rng), unit(rng)};
      const Vec2 y{unit(rng), unit(rng)};
      const double s = -1.0 + 2.0 * unit(rng);
      const Vec2 z = integrate_leaf(ctx.unstable, x, s, ctx.step).point_at(s);
      const Vec2 g = holonomy(ctx, x, y, z, HolonomyMethod::Geometric).image;
      const Vec2 t = holonomy(ctx, x, y, z, HolonomyMethod::Transport).image;
      cross = std::max(cross, norm(g - t));
      l22 << x.x << ',' << x.y << ',' << y.x << ',' << y.y << ',' << s << ',' << g.x << ','
          << g.y << ',' << t.x << ',' << t.y << '\n';
    }
  });

  c.check("deck action composition", compose, tol);
  c.check("deck action commutation", commute, tol);
  c.check("deck action intertwining", intertwine, tol);
  c.check("geometric vs transport holonomy", cross, tol);
  if (c.art.enabled) {
    w.write_csv(c.art.add("origin_leaf.csv"));
    write_file(c.art.add("deck_action.csv"), p31.str());
    write_file(c.art.add("holonomy_cross.csv"), l22.str());
  }
  return {{"points", c.p.cfg.holonomy_points},
          {"triples", c.p.cfg.holonomy_triples},
          {"tolerance", tol},
          {"deck_composition_sup", compose},
          {"deck_commutation_sup", commute},
          {"deck_intertwining_sup", intertwine},
          {"holonomy_cross_sup", cross}};
}

json holder_json(const HolderEstimate& h) {
  return {{"exponent", h.exponent},
          {"raw_slope", number_or_null(h.raw_slope)},
          {"band", h.band},
          {"saturated", h.saturated},
          {"scales", h.scales},
          {"oscillations", h.oscillations}};
}

json section_circle(Context& c) {
  const ExperimentConfig& cfg = c.p.cfg;
  const LeafContext& ctx = c.p.leaves();
  const auto& a = c.p.f.linear();
  const double tol = cfg.holonomy_tol;
  json j;

  const ChartMap chart_f = in_module("circle-reduction", [&] { return build_chart_f(ctx, cfg.gluing_order); });
  const ChartMap chart_a = in_module("circle-reduction", [&] { return build_chart_A(a); });
  const SeamReport seam = chart_f.seam_mismatch();
  j["chart"] = {{"gluing_order", chart_f.gluing_order()},
                {"scale", chart_f.scale()},
                {"period_arclength", chart_f.period_arclength()},
                {"tau_derivatives", chart_f.tau_derivatives()},
                {"sigma_coefficients", chart_f.sigma_coefficients()},
                {"seam_mismatch", seam.mismatch},
                {"deck_defect", chart_f.deck_defect(256)}};

  const CircleMapLift circle =
      in_module("circle-reduction", [&] { return induce_circle_map(chart_f, cfg.circle_samples); });
  const auto lift = [&circle](double x) { return circle(x); };
  const auto lift_a = [&chart_a](double x) { return circle_map_value(chart_a, x); };
  j["circle_map"] = {{"samples", circle.samples()},
                     {"min_derivative", circle.min_derivative()},
                     {"commutation_defect", circle.commutation_defect},
                     {"degree_defect", circle.degree_defect}};

  const QuadraticSurd alpha = linear_rotation_number(a);
  in_module("circle-reduction", [&] {
    const RotationResult rf = rotation_number(lift, cfg.rotation_tol);
    const RotationResult ra = rotation_number(lift_a, cfg.rotation_tol);
    j["rotation"] = {{"algebraic", alpha.value()},
                     {"algebraic_surd", alpha.to_string()},
                     {"rho_f", rf.rho},
                     {"rho_f_error", rf.error_estimate},
                     {"rho_f_iterations", rf.iterations},
                     {"rho_A", ra.rho},
                     {"rho_A_error", ra.error_estimate},
                     {"invariance_gap", std::abs(rf.rho - ra.rho)},
                     {"linear_gap", std::abs(ra.rho - alpha.value())}};
    c.check("rotation number invariance", std::abs(rf.rho - ra.rho), tol);
  });

  const ReducedConjugacy rh = in_module("circle-reduction", [&] {
    return reduced_conjugacy(c.p.h(), chart_f, chart_a, circle, cfg.circle_samples,
                             std::numeric_limits<double>::infinity());
  });
  j["reduced_conjugacy"] = {{"commutation_defect", rh.commutation_defect},
                            {"rotation_defect", rh.rotation_defect},
                            {"leaf_defect", rh.leaf_defect},
                            {"min_increment", rh.min_increment}};
  c.check("reduced conjugacy commutation", rh.commutation_defect, tol);
  c.check("reduced conjugacy rotation identity", rh.rotation_defect, tol);

  const double rho = j["rotation"]["rho_f"].get<double>();
  const BirkhoffConjugacy bc = in_module("circle-reduction", [&] {
    return birkhoff_conjugacy(lift, rho, cfg.birkhoff_terms, cfg.birkhoff_grid);
  });
  j["birkhoff"] = {{"terms", bc.terms}, {"grid", static_cast<int>(bc.grid.size())}, {"defect", bc.defect}};

  const RegularityReport rr =
      in_module("regularity-estimators", [&] { return ko_condition_report(circle, alpha, cfg.lp_exponent); });
  j["regularity"] = {{"p", rr.p},
                     {"lp_integral", rr.lp_integral},
                     {"lp_integral_half", rr.lp_integral_half},
                     {"lp_norm", rr.lp_norm},
                     {"refinement_delta", rr.refinement_delta},
                     {"sup_second", rr.sup_second},
                     {"inf_first", rr.inf_first},
                     {"first_noise_floor", rr.first_noise_floor},
                     {"second_noise_floor", rr.second_noise_floor},
                     {"degree_two", rr.degree_two},
                     {"ac_score", rr.ac_score},
                     {"derivative_holder", holder_json(rr.derivative_holder)},
                     {"samples", rr.samples},
                     {"tags", rr.tags}};

  if (c.art.enabled) {
    circle.write_csv(c.art.add("circle_map.csv"));
    std::ostringstream os;
    os << std::setprecision(17) << "t,H\n";
    for (std::size_t i = 0; i < rh.values.size(); ++i) {
      os << static_cast<double>(i) / static_cast<double>(rh.values.size()) << ',' << rh.values[i] << '\n';
    }
    write_file(c.art.add("reduced_conjugacy.csv"), os.str());
    std::ostringstream bs;
    bs << std::setprecision(17) << "x,phi\n";
    for (std::size_t i = 0; i < bc.grid.size(); ++i) bs << bc.grid[i] << ',' << bc.values[i] << '\n';
    write_file(c.art.add("birkhoff.csv"), bs.str());
    std::ostringstream hs;
    hs << std::setprecision(17) << "scale,oscillation\n";
    for (std::size_t i = 0; i < rr.derivative_holder.scales.size(); ++i) {
      hs << rr.derivative_holder.scales[i] << ',' << rr.derivative_holder.oscillations[i] << '\n';
    }
    write_file(c.art.add("holder_scales.csv"), hs.str());
  }
  return j;
}

struct SectionSpec {
  const char* name;
  std::function<json(Context&)> run;
};

std::vector<SectionSpec> sections_for(Subcommand sub) {
  const SectionSpec linear{"linear", section_linear};
  const SectionSpec cert{"certification", section_certificate};
  const SectionSpec conj{"conjugacy", section_conjugacy};
  const SectionSpec per{"periodic_data", section_periodic};
  const SectionSpec hol{"holonomy", section_holonomy};
  const SectionSpec circ{"circle", section_circle};
  switch (sub) {
    case Subcommand::AnalyzeLinear: return {linear};
    case Subcommand::VerifyAnosov: return {cert};
    case Subcommand::Conjugacy: return {cert, conj};
    case Subcommand::PeriodicData: return {cert, per};
    case Subcommand::HolonomyCheck: return {cert, hol};
    case Subcommand::CircleReduce: return {cert, circ};
    case Subcommand::Full: return {linear, cert, conj, per, hol, circ};
  }
  return {};
}

json config_json(const ExperimentConfig& c) {
  const PerturbedMap f = c.map();
  json terms = json::array();
  for (const auto& t : f.terms()) {
    terms.push_back({{"k", json::array({t.k[0], t.k[1]})}, {"cos", vec(t.cos_coef)}, {"sin", vec(t.sin_coef)}});
  }
  return {{"matrix", json::array({json::array({c.matrix[0][0], c.matrix[0][1]}),
                                  json::array({c.matrix[1][0], c.matrix[1][1]})})},
          {"epsilon", c.epsilon},
          {"perturbation", terms},
          {"grid", c.grid},
          {"conjugacy_tol", c.conjugacy_tol},
          {"rotation_tol", c.rotation_tol},
          {"holonomy_tol", c.holonomy_tol},
          {"max_period", c.max_period},
          {"circle_samples", c.circle_samples},
          {"gluing_order", c.gluing_order},
          {"birkhoff_terms", c.birkhoff_terms},
          {"birkhoff_grid", c.birkhoff_grid},
          {"lp_exponent", c.lp_exponent},
          {"holonomy_points", c.holonomy_points},
          {"holonomy_triples", c.holonomy_triples},
          {"seed", c.seed}};
}

json manifest_for(const std::filesystem::path& dir, const std::vector<std::string>& files) {
  json m = json::object();
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& name : sorted) m[name] = sha256_hex(read_file(dir / name));
  return m;
}

}  // namespace

// ---------------------------------------------------------------- public

PerturbedMap ExperimentConfig::map() const {
  const HyperbolicAutomorphism a = analyze_automorphism(matrix);
  if (terms.empty()) {
    const PerturbedMap d = PerturbedMap::default_family(epsilon);
    return PerturbedMap(a, d.terms(), epsilon);
  }
  return PerturbedMap(a, terms, epsilon);
}

void ExperimentConfig::scale_tolerances(double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::ConfigError, "tolerance scale must be a positive real");
  }
  conjugacy_tol *= factor;
  rotation_tol *= factor;
  holonomy_tol *= factor;
}

void ExperimentConfig::validate() const {
  const auto bad = [](const std::string& field, const std::string& msg) {
    throw Error(ErrorCode::ConfigError, "field '" + field + "': " + msg);
  };
  try {
    (void)analyze_automorphism(matrix);
  } catch (const Error& e) {
    bad("map.matrix", e.what());
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) bad("map.epsilon", "must be a finite real >= 0");
  if (grid < 128 || (grid & (grid - 1)) != 0) bad("conjugacy.grid", "must be a power of two >= 128");
  if (!(conjugacy_tol > 0.0)) bad("tolerances.conjugacy", "must be > 0");
  if (!(rotation_tol > 0.0)) bad("tolerances.rotation", "must be > 0");
  if (!(holonomy_tol > 0.0)) bad("tolerances.holonomy", "must be > 0");
  if (max_period < 1 || max_period > 8) bad("periodic.max_period", "must lie in 1..8");
  if (circle_samples < 1024 || circle_samples % 2 != 0) bad("circle.samples", "must be even and >= 1024");
  if (gluing_order < 1 || gluing_order > 4) bad("circle.gluing_order", "must lie in 1..4");
  if (birkhoff_terms < 1) bad("circle.birkhoff_terms", "must be positive");
  if (birkhoff_grid < 2) bad("circle.birkhoff_grid", "must be at least 2");
  if (!(lp_exponent > 1.0)) bad("circle.lp_exponent", "must exceed 1");
  if (holonomy_points < 1) bad("holonomy.points", "must be positive");
  if (holonomy_triples < 1) bad("holonomy.triples", "must be positive");
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": " << e.msg;
    throw Error(ErrorCode::ConfigError, os.str());
  }
  const Reader r(source);
  ExperimentConfig c;
  if (root.IsNull()) return c;
  r.keys(root, "", {"map", "conjugacy", "tolerances", "periodic", "circle", "holonomy", "run"});

  if (const auto m = root["map"]) {
    r.keys(m, "map", {"matrix", "epsilon", "perturbation"});
    if (const auto mat = m["matrix"]) {
      if (!mat.IsSequence() || mat.size() != 2) r.fail(mat, "map.matrix", "expected a 2x2 list of integers");
      for (std::size_t i = 0; i < 2; ++i) {
        const auto row = mat[i];
        const std::string f = "map.matrix[" + std::to_string(i) + "]";
        if (!row.IsSequence() || row.size() != 2) r.fail(row, f, "expected a list of two integers");
        for (std::size_t k = 0; k < 2; ++k) {
          c.matrix[i][k] = r.integer(row[k], f + "[" + std::to_string(k) + "]");
        }
      }
      try {
        (void)analyze_automorphism(c.matrix);
      } catch (const Error& e) {
        r.fail(mat, "map.matrix", e.what());
      }
    }
    if (const auto e = m["epsilon"]) {
      c.epsilon = r.real(e, "map.epsilon");
      if (c.epsilon < 0.0) r.fail(e, "map.epsilon", "must be >= 0");
    }
    if (const auto terms = m["perturbation"]) {
      if (!terms.IsSequence()) r.fail(terms, "map.perturbation", "expected a list of terms");
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string f = "map.perturbation[" + std::to_string(i) + "]";
        const auto t = terms[i];
        r.keys(t, f, {"k", "cos", "sin"});
        TrigTerm term;
        const auto k = t["k"];
        if (!k || !k.IsSequence() || k.size() != 2) r.fail(k ? k : t, f + ".k", "expected two integers");
        term.k = {r.integer(k[0], f + ".k[0]"), r.integer(k[1], f + ".k[1]")};
        if (t["cos"]) term.cos_coef = r.pair(t["cos"], f + ".cos");
        if (t["sin"]) term.sin_coef = r.pair(t["sin"], f + ".sin");
        c.terms.push_back(term);
      }
    }
  }
  if (const auto s = root["conjugacy"]) {
    r.keys(s, "conjugacy", {"grid"});
    if (s["grid"]) c.grid = static_cast<int>(r.integer(s["grid"], "conjugacy.grid"));
  }
  if (const auto t = root["tolerances"]) {
    r.keys(t, "tolerances", {"conjugacy", "rotation", "holonomy"});
    const auto positive = [&](const char* key, double& out) {
      if (const auto n = t[key]) {
        out = r.real(n, std::string("tolerances.") + key);
        if (!(out > 0.0)) r.fail(n, std::string("tolerances.") + key, "must be > 0");
      }
    };
    positive("conjugacy", c.conjugacy_tol);
    positive("rotation", c.rotation_tol);
    positive("holonomy", c.holonomy_tol);
  }
  if (const auto p = root["periodic"]) {
    r.keys(p, "periodic", {"max_period"});
    if (p["max_period"]) c.max_period = static_cast<int>(r.integer(p["max_period"], "periodic.max_period"));
  }
  if (const auto ci = root["circle"]) {
    r.keys(ci, "circle", {"samples", "gluing_order", "birkhoff_terms", "birkhoff_grid", "lp_exponent"});
    if (ci["samples"]) c.circle_samples = static_cast<int>(r.integer(ci["samples"], "circle.samples"));
    if (ci["gluing_order"]) c.gluing_order = static_cast<int>(r.integer(ci["gluing_order"], "circle.gluing_order"));
    if (ci["birkhoff_terms"]) c.birkhoff_terms = static_cast<int>(r.integer(ci["birkhoff_terms"], "circle.birkhoff_terms"));
    if (ci["birkhoff_grid"]) c.birkhoff_grid = static_cast<int>(r.integer(ci["birkhoff_grid"], "circle.birkhoff_grid"));
    if (ci["lp_exponent"]) c.lp_exponent = r.real(ci["lp_exponent"], "circle.lp_exponent");
  }
  if (const auto h = root["holonomy"]) {
    r.keys(h, "holonomy", {"points", "triples"});
    if (h["points"]) c.holonomy_points = static_cast<int>(r.integer(h["points"], "holonomy.points"));
    if (h["triples"]) c.holonomy_triples = static_cast<int>(r.integer(h["triples"], "holonomy.triples"));
  }
  if (const auto run = root["run"]) {
    r.keys(run, "run", {"seed", "output"});
    if (run["seed"]) c.seed = r.get<std::uint64_t>(run["seed"], "run.seed", "an unsigned integer");
    if (run["output"]) c.output = r.get<std::string>(run["output"], "run.output", "a path");
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, source + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return parse_config(text, path.string());
}

std::string canonical_config(const ExperimentConfig& config) { return config_json(config).dump(); }

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoError, "SHA-256 failed");
  }
  return hex(digest, len);
}

const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::AnalyzeLinear: return "analyze-linear";
    case Subcommand::VerifyAnosov: return "verify-anosov";
    case Subcommand::Conjugacy: return "conjugacy";
    case Subcommand::PeriodicData: return "periodic-data";
    case Subcommand::HolonomyCheck: return "holonomy-check";
    case Subcommand::CircleReduce: return "circle-reduce";
    case Subcommand::Full: return "full";
  }
  return "?";
}

Subcommand parse_subcommand(const std::string& name) {
  for (Subcommand s : {Subcommand::AnalyzeLinear, Subcommand::VerifyAnosov, Subcommand::Conjugacy,
                       Subcommand::PeriodicData, Subcommand::HolonomyCheck, Subcommand::CircleReduce,
                       Subcommand::Full}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown subcommand '" + name + "'");
}

RunOutcome run_experiment(Subcommand sub, const ExperimentConfig& config, bool write) {
  config.validate();
  const std::string canonical = canonical_config(config);
  const std::string run_id = sha256_hex(std::string(to_string(sub)) + "\n" + canonical);

  RunOutcome out;
  Artifacts art;
  art.enabled = write;
  if (write) {
    out.directory = config.output / (std::string(to_string(sub)) + "-" + run_id.substr(0, 16));
    art.dir = out.directory;
    std::error_code ec;
    std::filesystem::create_directories(art.dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + art.dir.string() + ": " + ec.message());
  }

  Pipeline pipeline(config);
  Context ctx{pipeline, art, out.violations};
  json report;
  report["schema"] = kReportSchema;
  report["subcommand"] = to_string(sub);
  report["run_id"] = run_id;
  report["config"] = json::parse(canonical);
  json sections = json::object();
  json timing;
  timing["schema"] = kReportSchema;
  timing["run_id"] = run_id;
  json seconds = json::object();
  for (const auto& section : sections_for(sub)) {
    const auto start = std::chrono::steady_clock::now();
    try {
      sections[section.name] = section.run(ctx);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CertificationFailed) throw;
      sections["certification"] = {{"certified", false}, {"error", e.what()}};
      out.exit_code = 2;
    }
    seconds[section.name] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.exit_code == 2) break;
  }
  if (out.exit_code == 0 && !out.violations.empty()) out.exit_code = 3;
  report["sections"] = sections;
  report["violations"] = out.violations;
  report["exit_code"] = out.exit_code;
  timing["seconds"] = seconds;
  out.report_json = report.dump(2) + "\n";
  out.timing_json = timing.dump(2) + "\n";

  if (write) {
    write_file(art.add("report.json"), out.report_json);
    write_file(art.dir / "timing.json", out.timing_json);
    write_file(art.dir / "manifest.json", manifest_for(art.dir, art.files).dump(2) + "\n");
  }
  return out;
}

AggregateOutcome aggregate_reports(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw Error(ErrorCode::IoError, "no such directory " + root.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  AggregateOutcome agg;
  json runs = json::array();
  for (const auto& dir : dirs) {
    const json manifest = json::parse(read_file(dir / "manifest.json"));
    std::vector<std::string> bad;
    for (const auto& [name, digest] : manifest.items()) {
      const auto path = dir / name;
      if (!std::filesystem::exists(path) || sha256_hex(read_file(path)) != digest.get<std::string>()) {
        bad.push_back(name);
      }
    }
    json entry;
    entry["directory"] = dir.filename().string();
    entry["intact"] = bad.empty();
    entry["modified"] = bad;
    if (std::filesystem::exists(dir / "report.json")) {
      const json report = json::parse(read_file(dir / "report.json"));
      entry["subcommand"] = report.value("subcommand", "");
      entry["run_id"] = report.value("run_id", "");
      entry["exit_code"] = report.value("exit_code", -1);
      entry["violations"] = report.value("violations", json::array());
    }
    if (!bad.empty()) ++agg.tampered;
    ++agg.runs;
    runs.push_back(entry);
  }
  json summary;
  summary["schema"] = kReportSchema;
  summary["kind"] = "aggregate";
  summary["runs"] = runs;
  summary["tampered"] = agg.tampered;
  agg.summary_json = summary.dump(2) + "\n";
  return agg;
}

}  // namespace rigidity
