#include "specquant/spectrum.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace specquant {

namespace {

void validate(std::vector<Atom>& atoms, std::vector<Segment>& segments) {
  for (auto& atom : atoms) {
    if (!std::isfinite(atom.xi) || !std::isfinite(atom.power) || atom.power < 0.0)
      throw std::invalid_argument("spectral atom needs a finite frequency and non-negative power");
    atom.xi = wrap_frequency(atom.xi);
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.xi < r.xi; });
  for (std::size_t i = 1; i < atoms.size(); ++i)
    if (atoms[i].xi == atoms[i - 1].xi)
      throw std::invalid_argument("spectral atoms must have pairwise distinct frequencies");

  for (const auto& seg : segments) {
    if (!std::isfinite(seg.a) || !std::isfinite(seg.b) || !std::isfinite(seg.power))
      throw std::invalid_argument("spectral segment has non-finite fields");
    if (!(seg.a >= -0.5 && seg.b <= 0.5 && seg.a < seg.b))
      throw std::invalid_argument("spectral segment must satisfy -1/2 <= a < b <= 1/2");
    if (seg.power < 0.0) throw std::invalid_argument("spectral segment power must be non-negative");
  }
  std::sort(segments.begin(), segments.end(),
            [](const Segment& l, const Segment& r) { return l.a < r.a; });
  for (std::size_t i = 1; i < segments.size(); ++i)
    if (segments[i].a < segments[i - 1].b)
      throw std::invalid_argument("spectral segments must be pairwise disjoint");
}

double sum_power(const std::vector<Atom>& atoms, const std::vector<Segment>& segments) {
  double total = 0.0;
  for (const auto& a : atoms) total += a.power;
  for (const auto& s : segments) total += s.power;
  return total;
}

}  // namespace

SpectralModel::SpectralModel(std::vector<Atom> atoms, std::vector<Segment> segments)
    : atoms_(std::move(atoms)), segments_(std::move(segments)) {
  validate(atoms_, segments_);
}

SpectralModel SpectralModel::normalized(std::vector<Atom> atoms, std::vector<Segment> segments) {
  SpectralModel model(std::move(atoms), std::move(segments));
  if (!model.is_normalized()) {
    std::ostringstream msg;
    msg << "spectral model power is " << model.total_power() << ", expected 1";
    throw std::invalid_argument(msg.str());
  }
  return model;
}

SpectralModel SpectralModel::renormalize(std::vector<Atom> atoms, std::vector<Segment> segments) {
  const double total = sum_power(atoms, segments);
  if (!(total > 0.0)) throw std::invalid_argument("cannot renormalize a spectral model with zero power");
  for (auto& a : atoms) a.power /= total;
  for (auto& s : segments) s.power /= total;
  return SpectralModel(std::move(atoms), std::move(segments));
}

SpectralModel SpectralModel::component(std::vector<Atom> atoms, std::vector<Segment> segments) {
  SpectralModel model(std::move(atoms), std::move(segments));
  if (model.total_power() > 1.0 + kNormTolerance)
    throw std::invalid_argument("spectral component power exceeds 1");
  return model;
}

SpectralModel SpectralModel::white() { return SpectralModel({}, {{-0.5, 0.5, 1.0}}); }

double SpectralModel::total_power() const { return sum_power(atoms_, segments_); }

double SpectralModel::continuous_power() const { return sum_power({}, segments_); }

bool SpectralModel::is_normalized() const {
  return std::abs(total_power() - 1.0) <= kNormTolerance;
}

SpectralModel SpectralModel::discrete_part() const { return SpectralModel(atoms_, {}); }

SpectralModel SpectralModel::continuous_part() const { return SpectralModel({}, segments_); }

double SpectralModel::discrete_distribution(double xi) const {
  double f = 0.0;
  for (const auto& a : atoms_)
    if (a.xi <= xi) f += a.power;
  return f;
}

double SpectralModel::continuous_distribution(double xi) const {
  double f = 0.0;
  for (const auto& s : segments_) f += s.power * std::clamp((xi - s.a) / (s.b - s.a), 0.0, 1.0);
  return f;
}

double SpectralModel::distribution(double xi) const {
  return discrete_distribution(xi) + continuous_distribution(xi);
}

std::string SpectralModel::describe() const {
  std::ostringstream out;
  out.precision(6);
  out << "SpectralModel{atoms=[";
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    out << (i ? ", " : "") << atoms_[i].xi << ':' << atoms_[i].power;
  out << "], segments=[";
  for (std::size_t i = 0; i < segments_.size(); ++i)
    out << (i ? ", " : "") << '[' << segments_[i].a << ',' << segments_[i].b
        << "):" << segments_[i].power;
  out << "]}";
  return out.str();
}

cmat CovarianceMatrix::dense() const {
  const Eigen::Index n = dimension();
  cmat m(n, n);
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index p = 0; p < n; ++p) m(p, q) = (*this)(p, q);
  return m;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

cplx autocorrelation(const SpectralModel& model, long m) {
  const double lag = static_cast<double>(m);
  cplx r{0.0, 0.0};
  for (const auto& a : model.atoms()) r += a.power * unit_phasor(lag * a.xi);
  for (const auto& s : model.segments())
    r += s.power * unit_phasor(0.5 * lag * (s.a + s.b)) * sinc(lag * (s.b - s.a));
  return r;
}

CovarianceMatrix covariance(const SpectralModel& model, Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("covariance dimension must be >= 1");
  cvec lags(n);
  for (Eigen::Index m = 0; m < n; ++m) lags(m) = autocorrelation(model, static_cast<long>(m));
  return CovarianceMatrix(std::move(lags));
}

cmat cross_covariance(const SpectralModel& model, long offset, Eigen::Index n) {
  if (offset < 1) throw std::invalid_argument("cross-covariance offset must be >= 1");
  if (n < 1) throw std::invalid_argument("cross-covariance dimension must be >= 1");
  // Entry (p, q) depends on p - q only; tabulate lags offset-(n-1) .. offset+(n-1).
  const long span = static_cast<long>(n) - 1;
  cvec table(2 * span + 1);
  for (long d = -span; d <= span; ++d) table(d + span) = autocorrelation(model, offset + d);
  cmat c(n, n);
  for (Eigen::Index q = 0; q < n; ++q)
    for (Eigen::Index p = 0; p < n; ++p) c(p, q) = table(static_cast<long>(p - q) + span);
  return c;
}

void to_json(nlohmann::json& j, const SpectralModel& model) {
  j = nlohmann::json::object();
  j["atoms"] = nlohmann::json::array();
  for (const auto& a : model.atoms()) j["atoms"].push_back({{"xi", a.xi}, {"power", a.power}});
  j["segments"] = nlohmann::json::array();
  for (const auto& s : model.segments())
    j["segments"].push_back({{"a", s.a}, {"b", s.b}, {"power", s.power}});
}

SpectralModel spectral_model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("spectral model JSON must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "atoms" && key != "segments")
      throw std::invalid_argument("unknown spectral model key: " + key);
  std::vector<Atom> atoms;
  std::vector<Segment> segments;
  try {
    if (j.contains("atoms"))
      for (const auto& a : j.at("atoms"))
        atoms.push_back({a.at("xi").get<double>(), a.at("power").get<double>()});
    if (j.contains("segments"))
      for (const auto& s : j.at("segments"))
        segments.push_back({s.at("a").get<double>(), s.at("b").get<double>(),
                            s.at("power").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed spectral model JSON: ") + e.what());
  }
  return SpectralModel::normalized(std::move(atoms), std::move(segments));
}

}  // namespace specquant
