#include "fedhpn/hp_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "fedhpn/common.hpp"

namespace fedhpn {

namespace {

// Decimal big-integer multiply-accumulate: digits * m, digits as a string.
std::string decimal_mul(const std::string& digits, std::uint64_t m) {
  std::string out;
  out.reserve(digits.size() + 20);
  unsigned __int128 carry = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    unsigned __int128 v = static_cast<unsigned __int128>(*it - '0') * m + carry;
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    carry = v / 10;
  }
  while (carry > 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(carry % 10)));
    carry /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string decimal_pow(std::uint64_t base, int exp) {
  std::string acc = "1";
  for (int i = 0; i < exp; ++i) acc = decimal_mul(acc, base);
  return acc;
}

}  // namespace

void Dimension::validate() const {
  if (name.empty()) throw ConfigError("dimension: empty name");
  if (kind == DimKind::Discrete) {
    if (candidates.empty())
      throw ConfigError("dimension '" + name + "': no candidates");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!std::isfinite(candidates[i]))
        throw ConfigError("dimension '" + name + "': non-finite candidate");
      if (i > 0 && !(candidates[i] > candidates[i - 1]))
        throw ConfigError("dimension '" + name +
                          "': candidates must be strictly increasing");
    }
  } else {
    if (!(lo < hi))
      throw ConfigError("dimension '" + name + "': requires lo < hi");
    if (scale == DimScale::Log && !(lo > 0.0))
      throw ConfigError("dimension '" + name + "': log scale requires lo > 0");
  }
}

double Dimension::from_unit(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  if (scale == DimScale::Log) return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
  return lo + u * (hi - lo);
}

void SearchSpace::validate() const {
  if (dims.empty()) throw ConfigError("search space: no dimensions");
  std::set<std::string> names;
  for (const auto& d : dims) {
    d.validate();
    if (!names.insert(d.name).second)
      throw ConfigError("search space: duplicate dimension '" + d.name + "'");
  }
}

bool SearchSpace::all_discrete() const {
  return std::all_of(dims.begin(), dims.end(),
                     [](const Dimension& d) { return d.kind == DimKind::Discrete; });
}

int SearchSpace::dim_index(const std::string& name) const {
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i].name == name) return static_cast<int>(i);
  return -1;
}

void ConfigSample::validate(const SearchSpace& space) const {
  if (values.size() != space.dims.size())
    throw ConfigError("config sample: value count does not match space");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& d = space.dims[i];
    if (d.kind == DimKind::Discrete) {
      if (values[i].index < 0 ||
          values[i].index >= static_cast<int>(d.candidates.size()))
        throw ConfigError("config sample: index out of range for '" + d.name + "'");
    } else {
      if (!(values[i].value >= d.lo && values[i].value <= d.hi))
        throw ConfigError("config sample: value out of bounds for '" + d.name + "'");
    }
  }
  if (space.all_discrete() && log_prob > 0.0)
    throw ConfigError("config sample: positive log_prob on a discrete space");
}

SpaceSize space_size(const SearchSpace& space) {
  space.validate();
  SpaceSize out;
  out.digits = "1";
  out.count = 1;
  for (const auto& d : space.dims) {
    if (d.kind == DimKind::Continuous) {
      out.infinite = true;
      out.fits_u64 = false;
      out.count = 0;
      out.digits = "inf";
      return out;
    }
    const auto k = static_cast<std::uint64_t>(d.candidates.size());
    out.digits = decimal_mul(out.digits, k);
    if (out.fits_u64) {
      unsigned __int128 next = static_cast<unsigned __int128>(out.count) * k;
      if (next > UINT64_MAX) {
        out.fits_u64 = false;
        out.count = 0;
      } else {
        out.count = static_cast<std::uint64_t>(next);
      }
    }
  }
  return out;
}

SpaceSize personalized_space_size(const SearchSpace& space, int num_clients) {
  if (num_clients < 1) throw ConfigError("personalized_space_size: n must be >= 1");
  SpaceSize base = space_size(space);
  if (base.infinite) return base;
  SpaceSize out;
  out.digits = decimal_pow(base.count, num_clients);
  out.fits_u64 = true;
  unsigned __int128 acc = 1;
  for (int i = 0; i < num_clients && out.fits_u64; ++i) {
    acc *= base.count;
    if (acc > UINT64_MAX) out.fits_u64 = false;
  }
  out.count = out.fits_u64 ? static_cast<std::uint64_t>(acc) : 0;
  return out;
}

std::map<std::string, double> decode(const SearchSpace& space,
                                     const ConfigSample& sample) {
  sample.validate(space);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < space.dims.size(); ++i) {
    const auto& d = space.dims[i];
    out[d.name] = d.kind == DimKind::Discrete ? d.candidates[sample.values[i].index]
                                              : sample.values[i].value;
  }
  return out;
}

nlohmann::json render_space(const SearchSpace& space) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& d : space.dims) {
    nlohmann::json jd;
    jd["name"] = d.name;
    if (d.kind == DimKind::Discrete) {
      jd["kind"] = "discrete";
      jd["candidates"] = d.candidates;
    } else {
      jd["kind"] = "continuous";
      jd["lo"] = d.lo;
      jd["hi"] = d.hi;
      jd["scale"] = d.scale == DimScale::Log ? "log" : "linear";
    }
    dims.push_back(std::move(jd));
  }
  return dims;
}

SearchSpace parse_space(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("space: expected an array of dimensions");
  SearchSpace space;
  for (const auto& jd : j) {
    Dimension d;
    if (!jd.contains("name")) throw ConfigError("space: dimension missing 'name'");
    d.name = jd.at("name").get<std::string>();
    const std::string kind = jd.value("kind", "discrete");
    if (kind == "discrete") {
      d.kind = DimKind::Discrete;
      if (!jd.contains("candidates"))
        throw ConfigError("space: dimension '" + d.name + "' missing 'candidates'");
      d.candidates = jd.at("candidates").get<std::vector<double>>();
    } else if (kind == "continuous") {
      d.kind = DimKind::Continuous;
      if (!jd.contains("lo") || !jd.contains("hi"))
        throw ConfigError("space: dimension '" + d.name + "' missing 'lo'/'hi'");
      d.lo = jd.at("lo").get<double>();
      d.hi = jd.at("hi").get<double>();
      const std::string scale = jd.value("scale", "linear");
      if (scale == "log") d.scale = DimScale::Log;
      else if (scale == "linear") d.scale = DimScale::Linear;
      else throw ConfigError("space: dimension '" + d.name + "': unknown scale '" + scale + "'");
    } else {
      throw ConfigError("space: dimension '" + d.name + "': unknown kind '" + kind + "'");
    }
    space.dims.push_back(std::move(d));
  }
  space.validate();
  return space;
}

bool operator==(const Dimension& a, const Dimension& b) {
  if (a.name != b.name || a.kind != b.kind) return false;
  if (a.kind == DimKind::Discrete) return a.candidates == b.candidates;
  return a.lo == b.lo && a.hi == b.hi && a.scale == b.scale;
}

bool operator==(const SearchSpace& a, const SearchSpace& b) {
  return a.dims == b.dims;
}

}  // namespace fedhpn
