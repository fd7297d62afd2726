#include "streamline/examples.hpp"

#include <map>

#include "streamline/types.hpp"

namespace streamline {

namespace {

const std::map<std::string, const char*>& table() {
  static const std::map<std::string, const char*> t = {
      {"identity", R"cfg({
  "density": {"kind": "custom", "expr": "1"},
  "drive": {"kind": "scalar2d", "f": "x"},
  "grid": {"lo": [0, 0], "hi": [1, 1], "cells": 16},
  "verify": {"residuals": ["divergence"], "energy": true}
})cfg"},
      {"extremal-ws", R"cfg({
  "density": {"kind": "extremal"},
  "drive": {"kind": "scalar2d", "f": "sin(x)*exp(y/2)"},
  "grid": {"lo": [0, 0], "hi": [1, 1], "cells": 32},
  "policy": {"mode": "single-branch", "branch": 0},
  "verify": {"residuals": ["divergence", "frobenius"], "energy": true}
})cfg"},
      {"extremal-wt", R"cfg({
  "density": {"kind": "extremal"},
  "drive": {"kind": "scalar2d", "f": "1.5*x+0.5*y+0.3*sin(x*y)"},
  "grid": {"lo": [0, 0], "hi": [1, 1], "cells": 32},
  "policy": {"mode": "single-branch", "branch": 1},
  "verify": {"residuals": ["divergence", "frobenius"]}
})cfg"},
      {"extremal-patch", R"cfg({
  "density": {"kind": "extremal"},
  "drive": {"builtin": "radial_log"},
  "grid": {"lo": [-2, -2], "hi": [2, 2], "cells": 64},
  "policy": {"mode": "region-map",
             "regions": [{"when": "1 - sqrt(x^2+y^2)", "branch": 1}],
             "default": 0},
  "verify": {"residuals": ["divergence", "frobenius"],
             "grids": [{"lo": [0.35, 0.35], "hi": [0.6, 0.6], "cells": 32},
                       {"lo": [1.3, 1.3], "hi": [2.1, 2.1], "cells": 32}],
             "reference": ["-y/(sqrt(x^2+y^2)*sqrt(1+(1-sqrt(x^2+y^2))^2*((sqrt(x^2+y^2)-1)/abs(sqrt(x^2+y^2)-1))))",
                           "x/(sqrt(x^2+y^2)*sqrt(1+(1-sqrt(x^2+y^2))^2*((sqrt(x^2+y^2)-1)/abs(sqrt(x^2+y^2)-1))))"]}
})cfg"},
      {"shallow-vortex", R"cfg({
  "density": {"kind": "shallow-water", "allow_nonphysical": true},
  "drive": {"builtin": "shallow_vortex", "params": {"R": 1}},
  "grid": {"lo": [-1.8, -1.8], "hi": [1.8, 1.8], "cells": 64},
  "policy": {"mode": "region-map",
             "regions": [{"when": "2*R/3 - (x^2+y^2)", "branch": 0},
                         {"when": "2*R - (x^2+y^2)", "branch": 1}],
             "default": 2},
  "frobenius": {"reference_G": ["2*x/(x^2+y^2)", "2*y/(x^2+y^2)"]},
  "verify": {"residuals": ["divergence", "frobenius"],
             "reference": ["-y/sqrt(R)", "x/sqrt(R)"], "reference_tol": 1e-10,
             "energy": true, "energy_region": "1/2 - (x^2+y^2)"}
})cfg"},
      {"shallow-vortex-r4", R"cfg({
  "density": {"kind": "shallow-water", "allow_nonphysical": true},
  "drive": {"builtin": "shallow_vortex", "params": {"R": 4}},
  "grid": {"lo": [-3.6, -3.6], "hi": [3.6, 3.6], "cells": 64},
  "policy": {"mode": "region-map",
             "regions": [{"when": "2*R/3 - (x^2+y^2)", "branch": 0},
                         {"when": "2*R - (x^2+y^2)", "branch": 1}],
             "default": 2},
  "frobenius": {"reference_G": ["2*x/(x^2+y^2)", "2*y/(x^2+y^2)"]},
  "verify": {"residuals": ["divergence", "frobenius"],
             "reference": ["-y/sqrt(R)", "x/sqrt(R)"], "reference_tol": 1e-10}
})cfg"},
      {"caustic-shadow", R"cfg({
  "density": {"kind": "caustic", "tau": 1},
  "drive": {"kind": "scalar2d", "f": "0.4*sin(x)*exp(y/2)"},
  "grid": {"lo": [0, 0], "hi": [1, 1], "cells": 32},
  "policy": {"mode": "single-branch", "branch": 0},
  "verify": {"residuals": ["divergence", "frobenius"], "energy": true}
})cfg"},
      {"caustic-light", R"cfg({
  "density": {"kind": "caustic", "tau": 1},
  "drive": {"kind": "scalar2d", "f": "0.4*sin(x)*exp(y/2)"},
  "grid": {"lo": [0, 0], "hi": [1, 1], "cells": 32},
  "policy": {"mode": "single-branch", "branch": 1},
  "verify": {"residuals": ["divergence", "frobenius"]}
})cfg"},
      {"born-infeld-fund", R"cfg({
  "density": {"kind": "born-infeld"},
  "drive": {"builtin": "coulomb"},
  "grid": {"lo": [-3, -3, -3], "hi": [3, 3, 3], "cells": 24},
  "policy": {"mode": "prefer-type1"},
  "frobenius": {"reference_G": ["2*x/((x^2+y^2+z^2)*(1+(x^2+y^2+z^2)^2))",
                                "2*y/((x^2+y^2+z^2)*(1+(x^2+y^2+z^2)^2))",
                                "2*z/((x^2+y^2+z^2)*(1+(x^2+y^2+z^2)^2))"]},
  "verify": {"residuals": ["minor", "frobenius"],
             "grid": {"lo": [0.8, 0.8, 0.8], "hi": [1.2, 1.2, 1.2], "cells": 16},
             "reference": ["-x/(sqrt(x^2+y^2+z^2)*sqrt(1+(x^2+y^2+z^2)^2))",
                           "-y/(sqrt(x^2+y^2+z^2)*sqrt(1+(x^2+y^2+z^2)^2))",
                           "-z/(sqrt(x^2+y^2+z^2)*sqrt(1+(x^2+y^2+z^2)^2))"]}
})cfg"},
      {"born-infeld-fund-minus", R"cfg({
  "density": {"kind": "born-infeld"},
  "drive": {"builtin": "coulomb"},
  "grid": {"lo": [-0.9, -0.9, -0.9], "hi": [0.9, 0.9, 0.9], "cells": 18},
  "policy": {"mode": "single-branch", "branch": 1},
  "frobenius": {"reference_G": ["2*x/((x^2+y^2+z^2)*(1-(x^2+y^2+z^2)^2))",
                                "2*y/((x^2+y^2+z^2)*(1-(x^2+y^2+z^2)^2))",
                                "2*z/((x^2+y^2+z^2)*(1-(x^2+y^2+z^2)^2))"]},
  "verify": {"residuals": ["minor", "frobenius"],
             "grid": {"lo": [0.3, 0.3, 0.3], "hi": [0.45, 0.45, 0.45], "cells": 16},
             "reference": ["-x/(sqrt(x^2+y^2+z^2)*sqrt(1-(x^2+y^2+z^2)^2))",
                           "-y/(sqrt(x^2+y^2+z^2)*sqrt(1-(x^2+y^2+z^2)^2))",
                           "-z/(sqrt(x^2+y^2+z^2)*sqrt(1-(x^2+y^2+z^2)^2))"]}
})cfg"},
      {"born-infeld-4d", R"cfg({
  "density": {"kind": "born-infeld"},
  "forms": {"n": 4, "k": 2, "gamma": true,
            "coeffs": {"1": "0.3*sin(x2)*x3", "2": "0.2*x1*exp(x4/2)",
                       "3": "0.25*cos(x1+x4)", "4": "0.2*x2*x3"}},
  "grid": {"lo": [0.1, 0.1, 0.1, 0.1], "hi": [0.6, 0.6, 0.6, 0.6], "cells": 8},
  "policy": {"mode": "prefer-type1"},
  "verify": {"residuals": ["codifferential"]}
})cfg"},
      {"shallow-empty", R"cfg({
  "density": {"kind": "shallow-water"},
  "drive": {"kind": "scalar2d", "f": "2*x"},
  "grid": {"lo": [0, 0], "hi": [1, 1], "cells": 8},
  "policy": {"mode": "prefer-type1"}
})cfg"},
  };
  return t;
}

}  // namespace

std::vector<std::string> example_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : table()) names.push_back(k);
  return names;
}

nlohmann::json example_config(const std::string& name) {
  auto it = table().find(name);
  if (it == table().end()) {
    std::string known;
    for (const auto& n : example_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown example '" + name + "' (known: " + known + ")");
  }
  auto j = nlohmann::json::parse(it->second);
  j["name"] = name;
  return j;
}

}  // namespace streamline
