#pragma once

// Named (base, probability) configurations.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stochadd {

struct Preset {
  std::string name;
  std::string base;
  std::string probs;
};

inline const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = {
      {"fig3a", "const:3", "plist:0.7;tail=1"},
      {"fig3b", "const:3", "plist:0.5;tail=1"},
      {"fig3c", "const:3", "plist:0.4;tail=1"},
      {"fig4a", "const:3", "plist:0.8,0.8,0.8;tail=1"},
      {"fig4b", "const:3", "plist:0.7,0.7,0.7;tail=1"},
      {"fig4c", "const:3", "plist:0.6,0.6,0.6;tail=1"},
      {"fig5a", "even", "plist:0.55,1,0.5;tail=0.55"},
      {"fig5b", "even", "plist:0.55,1;tail=0.55"},
      {"fig5c", "even", "plist:1;tail=0.55"},
      {"fig6a", "even", "pconst:0.8"},
      {"fig6b", "even", "pconst:0.6"},
      {"fig6c", "even", "pconst:0.52"},
      {"fig7a", "fib", "plist:0.55,1,0.5;tail=0.55"},
      {"fig7b", "fib", "plist:0.55,1;tail=0.55"},
      {"fig7c", "fib", "plist:1;tail=0.55"},
      {"fig8a", "fib", "pconst:0.55"},
      {"fig8b", "fib", "pconst:0.81"},
      {"fig8c", "fib", "pconst:0.61"},
      {"fig9a", "periodic:3,5", "plist:0.55,0.9;tail=0.55"},
      {"fig9b", "periodic:3,5", "plist:0.695,1;tail=0.695"},
      {"fig9c", "periodic:3,5", "plist:0.55,0.95,0.95,0.95;tail=0.55"},
      {"fig10a", "periodic:3,5", "pconst:0.7"},
      {"fig10b", "periodic:3,5", "pconst:0.704"},
      {"fig10c", "periodic:3,5", "pconst:0.8"},
  };
  return all;
}

inline std::optional<Preset> find_preset(std::string_view name) {
  const auto& all = presets();
  auto it = std::find_if(all.begin(), all.end(), [&](const Preset& p) { return p.name == name; });
  if (it == all.end()) return std::nullopt;
  return *it;
}

}  // namespace stochadd
