#include "tailforge/fit.hpp"

#include "tailforge/error.hpp"

namespace tailforge {

std::string to_string(Method m) {
  switch (m) {
    case Method::pareto_ml: return "ParetoML";
    case Method::gpd_ml: return "GpdML";
    case Method::ep: return "Ep";
    case Method::ep_plus: return "Ep+";
    case Method::epbar: return "Epbar";
    case Method::epbar_plus: return "Epbar+";
    case Method::tpbar: return "Tpbar";
    case Method::tpbar_plus: return "Tpbar+";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::pareto_ml, Method::gpd_ml, Method::ep, Method::ep_plus, Method::epbar,
                   Method::epbar_plus, Method::tpbar, Method::tpbar_plus}) {
    if (to_string(m) == name) return m;
  }
  fail(ErrorKind::invalid_argument, "unknown method '" + name + "'");
}

Track track_of(Method m) {
  switch (m) {
    case Method::pareto_ml:
    case Method::ep_plus:
    case Method::epbar_plus:
    case Method::tpbar_plus: return Track::pareto;
    default: return Track::gpd;
  }
}

bool is_extended(Method m) {
  return m == Method::ep || m == Method::ep_plus || m == Method::epbar || m == Method::epbar_plus;
}

bool is_transformed(Method m) { return m == Method::tpbar || m == Method::tpbar_plus; }

}  // namespace tailforge
