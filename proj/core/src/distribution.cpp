#include "sld/distribution.hpp"

#include <cmath>
#include <sstream>

#include "sld/errors.hpp"

namespace sld::uq {

namespace {
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

double central_value(const Distribution& d) {
    return std::visit(overloaded{[](const Fixed& f) { return f.value; },
                                 [](const Uniform& u) { return 0.5 * (u.lo + u.hi); },
                                 [](const Normal& n) { return n.mean; }},
                      d);
}

bool is_degenerate(const Distribution& d) {
    return std::visit(overloaded{[](const Fixed&) { return true; },
                                 [](const Uniform&) { return false; },
                                 [](const Normal& n) { return n.std == 0.0; }},
                      d);
}

void validate(const Distribution& d, const std::string& name) {
    std::visit(overloaded{[&](const Fixed& f) {
                              if (!std::isfinite(f.value))
                                  throw Error(ErrorCode::InvalidInput, name + ": fixed value not finite");
                          },
                          [&](const Uniform& u) {
                              if (!std::isfinite(u.lo) || !std::isfinite(u.hi) || !(u.lo < u.hi))
                                  throw Error(ErrorCode::InvalidInput, name + ": uniform needs lo < hi");
                          },
                          [&](const Normal& n) {
                              if (!std::isfinite(n.mean) || !std::isfinite(n.std) || n.std < 0.0)
                                  throw Error(ErrorCode::InvalidInput, name + ": normal needs std >= 0");
                          }},
               d);
}

Distribution relative_uniform(double nominal, double rel) {
    if (rel == 0.0) return Fixed{nominal};
    return Uniform{nominal * (1.0 - rel), nominal * (1.0 + rel)};
}

std::string describe(const Distribution& d) {
    std::ostringstream os;
    std::visit(overloaded{[&](const Fixed& f) { os << "fixed(" << f.value << ")"; },
                          [&](const Uniform& u) { os << "uniform(" << u.lo << ", " << u.hi << ")"; },
                          [&](const Normal& n) { os << "normal(" << n.mean << ", " << n.std << ")"; }},
               d);
    return os.str();
}

}  // namespace sld::uq
