#include "qlmi/level_structure.hpp"

#include "qlmi/constants.hpp"
#include "qlmi/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace qlmi::levels {

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

constexpr int kMaxTwiceJ = 200;

// Angular momenta are carried as twice their value.
int twice(double j) {
  const double t = 2.0 * j;
  const double r = std::round(t);
  require(std::isfinite(j) && std::abs(t - r) < 1e-9, ErrorCode::InvalidArgument,
          "angular momentum arguments must be integers or half-integers");
  require(std::abs(r) <= kMaxTwiceJ, ErrorCode::InvalidArgument, "angular momentum too large");
  return static_cast<int>(r);
}

const cpp_int& factorial(int n) {
  static std::vector<cpp_int> table = [] {
    std::vector<cpp_int> t(2 * kMaxTwiceJ + 8);
    t[0] = 1;
    for (std::size_t i = 1; i < t.size(); ++i)
      t[i] = t[i - 1] * static_cast<int>(i);
    return t;
  }();
  return table.at(static_cast<std::size_t>(n));
}

// n given as twice its value; must be even and non-negative.
const cpp_int& half_factorial(int twice_n) { return factorial(twice_n / 2); }

bool triangle(int a, int b, int c) {
  return c >= std::abs(a - b) && c <= a + b && (a + b + c) % 2 == 0;
}

// Δ(abc) = (a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!
cpp_rational delta(int a, int b, int c) {
  return cpp_rational(half_factorial(a + b - c) * half_factorial(a - b + c) * half_factorial(b + c - a),
                      half_factorial(a + b + c + 2));
}

// sign(s)·√(p·s²) evaluated after the exact product.
double signed_root(const cpp_rational& square_prefactor, const cpp_rational& sum) {
  if (sum == 0)
    return 0.0;
  const double magnitude = std::sqrt(static_cast<double>(cpp_rational(square_prefactor * sum * sum)));
  return sum < 0 ? -magnitude : magnitude;
}

double clebsch_twice(int j1, int m1, int j2, int m2, int j, int m) {
  if (m != m1 + m2 || !triangle(j1, j2, j))
    return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m) > j)
    return 0.0;
  if ((j1 + m1) % 2 || (j2 + m2) % 2 || (j + m) % 2)
    return 0.0;

  cpp_rational pre = delta(j1, j2, j) * (j + 1);
  pre *= cpp_rational(half_factorial(j1 + m1) * half_factorial(j1 - m1) * half_factorial(j2 + m2) *
                      half_factorial(j2 - m2) * half_factorial(j + m) * half_factorial(j - m));

  cpp_rational sum = 0;
  for (int k = 0;; k += 2) {
    const int d[6] = {k, j1 + j2 - j - k, j1 - m1 - k, j2 + m2 - k, j - j2 + m1 + k, j - j1 - m2 + k};
    if (d[1] < 0 || d[2] < 0 || d[3] < 0)
      break;
    if (d[4] < 0 || d[5] < 0)
      continue;
    cpp_int den = 1;
    for (int x : d)
      den *= half_factorial(x);
    const cpp_rational term(1, den);
    if ((k / 2) % 2)
      sum -= term;
    else
      sum += term;
  }
  return signed_root(pre, sum);
}

double sixj_twice(int a, int b, int c, int d, int e, int f) {
  if (!triangle(a, b, c) || !triangle(a, e, f) || !triangle(d, b, f) || !triangle(d, e, c))
    return 0.0;
  const cpp_rational pre = delta(a, b, c) * delta(a, e, f) * delta(d, b, f) * delta(d, e, c);

  const int lo = std::max({a + b + c, a + e + f, d + b + f, d + e + c});
  const int hi = std::min({a + b + d + e, a + c + d + f, b + c + e + f});
  cpp_rational sum = 0;
  for (int t = lo; t <= hi; t += 2) {
    cpp_int den = half_factorial(t - a - b - c) * half_factorial(t - a - e - f) *
                  half_factorial(t - d - b - f) * half_factorial(t - d - e - c) *
                  half_factorial(a + b + d + e - t) * half_factorial(a + c + d + f - t) *
                  half_factorial(b + c + e + f - t);
    const cpp_rational term(half_factorial(t + 2), den);
    if ((t / 2) % 2)
      sum -= term;
    else
      sum += term;
  }
  return signed_root(pre, sum);
}

double parity(int twice_exponent) {
  // (−1)^{n}, n = twice_exponent/2, which must be an integer
  require(twice_exponent % 2 == 0, ErrorCode::InvalidArgument, "non-integer phase exponent");
  return (twice_exponent / 2) % 2 ? -1.0 : 1.0;
}

const DipolePath* find_path(const LevelScheme& scheme, const std::string& from, const std::string& to) {
  for (const auto& p : scheme.paths)
    if (p.from == from && p.to == to)
      return &p;
  return nullptr;
}

}  // namespace

double clebsch_gordan(double j1, double m1, double j2, double m2, double j, double m) {
  const int tj1 = twice(j1), tm1 = twice(m1), tj2 = twice(j2), tm2 = twice(m2), tj = twice(j),
            tm = twice(m);
  require(tj1 >= 0 && tj2 >= 0 && tj >= 0, ErrorCode::InvalidArgument,
          "angular momenta must be non-negative");
  return clebsch_twice(tj1, tm1, tj2, tm2, tj, tm);
}

double wigner_3j(double j1, double j2, double j3, double m1, double m2, double m3) {
  const int tj1 = twice(j1), tj2 = twice(j2), tj3 = twice(j3);
  const int tm1 = twice(m1), tm2 = twice(m2), tm3 = twice(m3);
  require(tj1 >= 0 && tj2 >= 0 && tj3 >= 0, ErrorCode::InvalidArgument,
          "angular momenta must be non-negative");
  if (tm1 + tm2 + tm3 != 0)
    return 0.0;
  const double cg = clebsch_twice(tj1, tm1, tj2, tm2, tj3, -tm3);
  if (cg == 0.0)
    return 0.0;
  return parity(tj1 - tj2 - tm3) * cg / std::sqrt(tj3 + 1.0);
}

double wigner_6j(double j1, double j2, double j3, double j4, double j5, double j6) {
  const int a = twice(j1), b = twice(j2), c = twice(j3), d = twice(j4), e = twice(j5), f = twice(j6);
  require(std::min({a, b, c, d, e, f}) >= 0, ErrorCode::InvalidArgument,
          "angular momenta must be non-negative");
  return sixj_twice(a, b, c, d, e, f);
}

double hyperfine_strength(double j, double jp, double nuclear_spin, double f, double fp) {
  const double w = wigner_6j(j, jp, 1.0, fp, f, nuclear_spin);
  return (2.0 * fp + 1.0) * (2.0 * j + 1.0) * w * w;
}

double hyperfine_dipole(double j, double jp, double nuclear_spin, double f, double m, double fp,
                        double mp, int q) {
  const double reduced = parity(twice(fp) + twice(j) + 2 + twice(nuclear_spin)) *
                         std::sqrt((2.0 * fp + 1.0) * (2.0 * j + 1.0)) *
                         wigner_6j(j, jp, 1.0, fp, f, nuclear_spin);
  const double angular = parity(twice(fp) - 2 + twice(m)) * std::sqrt(2.0 * f + 1.0) *
                         wigner_3j(fp, 1.0, f, mp, q, -m);
  return reduced * angular;
}

// ---------------------------------------------------------------------------

const ExcitedLevel& LevelScheme::excited_level(const std::string& name) const {
  for (const auto& l : excited)
    if (l.name == name)
      return l;
  fail(ErrorCode::ValidationError, "unknown excited level '" + name + "'");
}

void validate(const LevelScheme& scheme) {
  auto ground_known = [&](const std::string& n) {
    return std::any_of(scheme.ground.begin(), scheme.ground.end(),
                       [&](const GroundLevel& g) { return g.name == n; });
  };
  require(std::isfinite(scheme.rabi_frequency) && scheme.rabi_frequency > 0.0,
          ErrorCode::ValidationError, "rabi_frequency must be positive");
  require(ground_known(scheme.up), ErrorCode::ValidationError, "unknown |up> level '" + scheme.up + "'");
  require(ground_known(scheme.down), ErrorCode::ValidationError,
          "unknown |down> level '" + scheme.down + "'");
  for (const auto& l : scheme.excited) {
    require(std::isfinite(l.detuning), ErrorCode::ValidationError,
            "excited level '" + l.name + "': detuning must be finite");
    require(std::isfinite(l.linewidth) && l.linewidth > 0.0, ErrorCode::ValidationError,
            "excited level '" + l.name + "': linewidth must be positive");
    require(l.detuning != 0.0, ErrorCode::ValidationError,
            "excited level '" + l.name + "': zero detuning");
  }
  for (const auto& p : scheme.paths) {
    require(ground_known(p.from) && ground_known(p.to), ErrorCode::ValidationError,
            "path " + p.from + "->" + p.via + "->" + p.to + ": unknown ground level");
    scheme.excited_level(p.via);
  }
}

SchemeDiagnostics diagnose(const LevelScheme& scheme) {
  SchemeDiagnostics d;
  d.min_detuning_over_width = std::numeric_limits<double>::infinity();
  for (const auto& p : scheme.paths) {
    if (std::abs(p.c_in) > 1.0 + 1e-12 || std::abs(p.c_out) > 1.0 + 1e-12)
      d.coefficients_bounded = false;
    const auto& l = scheme.excited_level(p.via);
    d.min_detuning_over_width = std::min(d.min_detuning_over_width, std::abs(l.detuning) / l.linewidth);
  }
  d.far_detuned = d.min_detuning_over_width >= constants::kMinDetuningOverWidth;
  return d;
}

double path_rate(const LevelScheme& scheme, const std::string& from, const std::string& to) {
  require(find_path(scheme, from, to) != nullptr, ErrorCode::InvalidArgument,
          "no dipole path connects " + from + " to " + to);
  std::complex<double> amplitude = 0.0;
  for (const auto& p : scheme.paths) {
    if (p.from != from || p.to != to)
      continue;
    const auto& l = scheme.excited_level(p.via);
    amplitude += p.c_in * p.c_out * std::sqrt(l.linewidth) / l.detuning;
  }
  return scheme.rabi_frequency * scheme.rabi_frequency * std::norm(amplitude);
}

const char* to_string(Branch branch) noexcept {
  switch (branch) {
    case Branch::PassiveDominated: return "passive_dominated";
    case Branch::ActiveDominated: return "active_dominated";
    case Branch::Degenerate: return "degenerate";
  }
  return "?";
}

BranchingResult z_from_scheme(const LevelScheme& scheme) {
  validate(scheme);
  BranchingResult res;
  res.gamma_up_down = path_rate(scheme, scheme.up, scheme.down);
  res.gamma_down_up = path_rate(scheme, scheme.down, scheme.up);
  require(res.gamma_up_down > 0.0 && res.gamma_down_up > 0.0, ErrorCode::InvalidArgument,
          "both transition directions need a nonzero rate");
  res.r = std::sqrt(res.gamma_down_up / res.gamma_up_down);

  if (std::abs(res.r - 1.0) < 1e-12) {
    res.branch = Branch::Degenerate;
    res.z = std::numeric_limits<double>::infinity();
    res.mu = res.nu = std::numeric_limits<double>::infinity();
    return res;
  }
  if (res.r > 1.0) {
    res.branch = Branch::PassiveDominated;
    res.z = std::sqrt((res.r + 1.0) / (res.r - 1.0));
  } else {
    res.branch = Branch::ActiveDominated;
    res.z = std::sqrt((1.0 - res.r) / (1.0 + res.r));
  }
  res.mu = 0.5 * (res.z + 1.0 / res.z);
  res.nu = 0.5 * (res.z - 1.0 / res.z);
  return res;
}

// ---------------------------------------------------------------------------

namespace {

std::string ground_name(double m) {
  std::ostringstream os;
  os << "g" << m;
  return os.str();
}

std::string excited_name(double f, double m) {
  std::ostringstream os;
  os << "e" << f << "_" << m;
  return os.str();
}

}  // namespace

LevelScheme build_scheme(const HyperfineManifold& mf, const ProbeSettings& probe) {
  require(mf.linewidth > 0.0, ErrorCode::ValidationError, "manifold linewidth must be positive");
  require(std::abs(mf.up_m - mf.down_m) == 1.0, ErrorCode::ValidationError,
          "up and down sublevels must differ by one quantum of m");
  double reference_offset = 0.0;
  bool have_reference = false;
  for (const auto& [f, offset] : mf.excited_levels)
    if (f == mf.reference_f) {
      reference_offset = offset;
      have_reference = true;
    }
  require(have_reference, ErrorCode::ValidationError, "reference excited level not in manifold");

  LevelScheme s;
  s.rabi_frequency = probe.rabi_frequency;
  s.up = ground_name(mf.up_m);
  s.down = ground_name(mf.down_m);
  s.ground = {{s.up, mf.ground_f, mf.up_m}, {s.down, mf.ground_f, mf.down_m}};

  // Drive components: the classical field acts with q_c, the quantum field
  // with q_q; each polarization projects with its spherical weight.
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<std::pair<int, double>> classical, quantum;
  if (probe.polarization == DrivePolarization::Y) {
    classical = {{-1, inv_sqrt2}, {1, inv_sqrt2}};
    quantum = {{0, 1.0}};
  } else {
    classical = {{0, 1.0}};
    quantum = {{-1, inv_sqrt2}, {1, inv_sqrt2}};
  }

  std::map<std::string, bool> excited_added;
  const std::pair<double, double> transitions[2] = {{mf.up_m, mf.down_m}, {mf.down_m, mf.up_m}};
  for (const auto& [ma, mb] : transitions) {
    for (const auto& [fp, offset] : mf.excited_levels) {
      for (const auto& [qc, wc] : classical) {
        const double mp = ma + qc;
        if (std::abs(mp) > fp)
          continue;
        const int qq = static_cast<int>(std::lround(mb - mp));
        const auto weight = std::find_if(quantum.begin(), quantum.end(),
                                         [&](const auto& e) { return e.first == qq; });
        if (weight == quantum.end())
          continue;
        // ⟨l|d_q|a⟩ = (−1)^q ⟨a|d_{−q}|l⟩
        const double c_in = (qc % 2 ? -wc : wc) *
                            hyperfine_dipole(mf.ground_j, mf.excited_j, mf.nuclear_spin, mf.ground_f, ma,
                                             fp, mp, -qc);
        const double c_out =
            weight->second *
            hyperfine_dipole(mf.ground_j, mf.excited_j, mf.nuclear_spin, mf.ground_f, mb, fp, mp, qq);
        if (c_in == 0.0 || c_out == 0.0)
          continue;
        const std::string via = excited_name(fp, mp);
        if (!excited_added[via]) {
          excited_added[via] = true;
          s.excited.push_back({via, fp, mp, probe.detuning - (offset - reference_offset), mf.linewidth});
        }
        s.paths.push_back({ground_name(ma), via, ground_name(mb), c_in, c_out});
      }
    }
  }
  return s;
}

namespace {

double mhz_to_rad(double mhz) { return 2.0 * constants::kPi * mhz * 1e6; }

template <typename T>
T required(const YAML::Node& node, const std::string& key, const std::string& where) {
  const YAML::Node v = node[key];
  require(v.IsDefined() && !v.IsNull(), ErrorCode::ParseError, where + "." + key + ": missing");
  try {
    return v.as<T>();
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::ParseError, where + "." + key + ": " + e.what());
  }
}

YAML::Node load_yaml(const std::filesystem::path& path) {
  try {
    return YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    fail(ErrorCode::IoError, "cannot read " + path.string());
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace

LevelSchemeFile load_manifold_file(const std::filesystem::path& path) {
  const YAML::Node root = load_yaml(path);
  LevelSchemeFile out;
  auto& mf = out.manifold;
  mf.atom = root["atom"] ? root["atom"].as<std::string>() : std::string{};
  mf.nuclear_spin = required<double>(root, "nuclear_spin", "root");

  const YAML::Node ground = root["ground"];
  require(ground.IsMap(), ErrorCode::ParseError, "ground: expected a map");
  mf.ground_j = required<double>(ground, "J", "ground");
  mf.ground_f = required<double>(ground, "F", "ground");

  const YAML::Node excited = root["excited"];
  require(excited.IsMap(), ErrorCode::ParseError, "excited: expected a map");
  mf.excited_j = required<double>(excited, "J", "excited");
  mf.linewidth = mhz_to_rad(required<double>(excited, "linewidth_mhz", "excited"));
  mf.reference_f = required<double>(excited, "reference_F", "excited");
  const YAML::Node levels = excited["levels"];
  require(levels.IsSequence() && levels.size() > 0, ErrorCode::ParseError,
          "excited.levels: expected a non-empty list");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string where = "excited.levels[" + std::to_string(i) + "]";
    mf.excited_levels.emplace_back(required<double>(levels[i], "F", where),
                                   mhz_to_rad(required<double>(levels[i], "offset_mhz", where)));
  }

  const YAML::Node enc = root["encoding"];
  require(enc.IsMap(), ErrorCode::ParseError, "encoding: expected a map");
  mf.up_m = required<double>(enc, "up_m", "encoding");
  mf.down_m = required<double>(enc, "down_m", "encoding");

  if (const YAML::Node probe = root["probe"]) {
    out.probe.detuning = mhz_to_rad(required<double>(probe, "detuning_mhz", "probe"));
    const auto pol = probe["polarization"] ? probe["polarization"].as<std::string>() : "y";
    require(pol == "x" || pol == "y", ErrorCode::ParseError, "probe.polarization: expected x or y");
    out.probe.polarization = pol == "x" ? DrivePolarization::X : DrivePolarization::Y;
  }
  return out;
}

std::filesystem::path default_cesium_d2_file() {
  return std::filesystem::path(QLMI_DATA_DIR) / "cs_d2.yaml";
}

LevelScheme cesium_d2_tables(double detuning_hz, DrivePolarization polarization) {
  static std::once_flag once;
  static LevelSchemeFile file;
  std::call_once(once, [] { file = load_manifold_file(default_cesium_d2_file()); });
  ProbeSettings probe;
  probe.detuning = 2.0 * constants::kPi * detuning_hz;
  probe.polarization = polarization;
  return build_scheme(file.manifold, probe);
}

LevelScheme load_level_scheme(const std::filesystem::path& path) {
  const YAML::Node root = load_yaml(path);
  LevelScheme s;
  s.rabi_frequency = required<double>(root, "rabi_frequency", "root");
  s.up = required<std::string>(root, "up", "root");
  s.down = required<std::string>(root, "down", "root");
  const YAML::Node ground = root["ground_levels"];
  require(ground.IsSequence(), ErrorCode::ParseError, "ground_levels: expected a list");
  for (std::size_t i = 0; i < ground.size(); ++i) {
    const std::string where = "ground_levels[" + std::to_string(i) + "]";
    s.ground.push_back({required<std::string>(ground[i], "name", where),
                        required<double>(ground[i], "F", where), required<double>(ground[i], "m", where)});
  }
  const YAML::Node excited = root["excited_levels"];
  require(excited.IsSequence(), ErrorCode::ParseError, "excited_levels: expected a list");
  for (std::size_t i = 0; i < excited.size(); ++i) {
    const std::string where = "excited_levels[" + std::to_string(i) + "]";
    s.excited.push_back({required<std::string>(excited[i], "name", where),
                         required<double>(excited[i], "F", where), required<double>(excited[i], "m", where),
                         required<double>(excited[i], "detuning", where),
                         required<double>(excited[i], "linewidth", where)});
  }
  const YAML::Node paths = root["dipole_paths"];
  require(paths.IsSequence(), ErrorCode::ParseError, "dipole_paths: expected a list");
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const std::string where = "dipole_paths[" + std::to_string(i) + "]";
    auto complex_of = [&](const char* key) {
      const YAML::Node v = paths[i][key];
      require(v.IsDefined(), ErrorCode::ParseError, where + "." + key + ": missing");
      if (v.IsSequence() && v.size() == 2)
        return std::complex<double>(v[0].as<double>(), v[1].as<double>());
      return std::complex<double>(v.as<double>(), 0.0);
    };
    s.paths.push_back({required<std::string>(paths[i], "from", where),
                       required<std::string>(paths[i], "via", where),
                       required<std::string>(paths[i], "to", where), complex_of("c_in"), complex_of("c_out")});
  }
  validate(s);
  return s;
}

void save_level_scheme(const LevelScheme& scheme, const std::filesystem::path& path) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "rabi_frequency" << YAML::Value << scheme.rabi_frequency;
  out << YAML::Key << "up" << YAML::Value << scheme.up;
  out << YAML::Key << "down" << YAML::Value << scheme.down;
  out << YAML::Key << "ground_levels" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : scheme.ground)
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << g.name << YAML::Key << "F"
        << YAML::Value << g.f << YAML::Key << "m" << YAML::Value << g.m << YAML::EndMap;
  out << YAML::EndSeq;
  out << YAML::Key << "excited_levels" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : scheme.excited)
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << l.name << YAML::Key << "F"
        << YAML::Value << l.f << YAML::Key << "m" << YAML::Value << l.m << YAML::Key << "detuning"
        << YAML::Value << l.detuning << YAML::Key << "linewidth" << YAML::Value << l.linewidth
        << YAML::EndMap;
  out << YAML::EndSeq;
  out << YAML::Key << "dipole_paths" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : scheme.paths) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "from" << YAML::Value << p.from << YAML::Key << "via" << YAML::Value << p.via
        << YAML::Key << "to" << YAML::Value << p.to;
    out << YAML::Key << "c_in" << YAML::Value << YAML::Flow << YAML::BeginSeq << p.c_in.real()
        << p.c_in.imag() << YAML::EndSeq;
    out << YAML::Key << "c_out" << YAML::Value << YAML::Flow << YAML::BeginSeq << p.c_out.real()
        << p.c_out.imag() << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorCode::IoError, "cannot write " + path.string());
  f << out.c_str() << "\n";
}

}  // namespace qlmi::levels
