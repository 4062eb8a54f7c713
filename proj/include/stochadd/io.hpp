#pragma once

// Text and image output: coordinate-format matrices, trajectory and root
// CSVs, PGM / PBM grids and flat key=value metadata.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "stochadd/detail/text.hpp"
#include "stochadd/error.hpp"
#include "stochadd/julia.hpp"
#include "stochadd/machine.hpp"
#include "stochadd/spectrum.hpp"

namespace stochadd {

/// '%' comment lines, a `rows cols nnz` header, then 0-based
/// `row col value` triples.
inline void write_matrix(std::ostream& os, const SparseTransitionMatrix& mat) {
  std::size_t nnz = 0;
  std::string clipped;
  for (Index n = 0; n < mat.dim; ++n) {
    nnz += mat.rows[n].entries.size();
    if (mat.clipped[n]) clipped += (clipped.empty() ? "" : ",") + std::to_string(n);
  }
  os << "% base=" << mat.base.to_string() << '\n';
  os << "% probs=" << mat.probs.to_string() << '\n';
  os << "% clipped=" << clipped << '\n';
  os << mat.dim << ' ' << mat.dim << ' ' << nnz << '\n';
  for (const auto& row : mat.rows) {
    for (const auto& e : row.entries) {
      os << row.source << ' ' << e.target << ' ' << detail::sig17(e.probability) << '\n';
    }
  }
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "step,state\n";
  for (std::size_t k = 0; k < traj.states.size(); ++k) os << k << ',' << traj.states[k] << '\n';
}

inline void write_roots_csv(std::ostream& os, const PointSpectrum& ps) {
  if (ps.partial) os << "# partial: root cap reached, deeper sets omitted\n";
  os << "depth,re,im\n";
  for (const auto& set : ps.sets) {
    for (const Complex z : set.roots) {
      os << set.depth << ',' << detail::sig17(z.real()) << ',' << detail::sig17(z.imag()) << '\n';
    }
  }
}

/// Gray value per pixel: 255 when bounded, else floor(254 * r_0 / R_max).
inline std::uint8_t gray_level(std::uint32_t stage, std::size_t depth) {
  if (stage == 0) return 255;
  return static_cast<std::uint8_t>(std::floor(254.0 * static_cast<double>(stage) / static_cast<double>(depth)));
}

inline void write_pgm(std::ostream& os, const MembershipGrid& grid) {
  os << "P5\n" << grid.resolution.width << ' ' << grid.resolution.height << "\n255\n";
  std::vector<char> row(grid.resolution.width);
  for (std::size_t y = 0; y < grid.resolution.height; ++y) {
    for (std::size_t x = 0; x < grid.resolution.width; ++x) {
      row[x] = static_cast<char>(gray_level(grid.stage(x, y), grid.depth));
    }
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

/// Membership mask; a set bit (black) marks a bounded pixel.
inline void write_pbm(std::ostream& os, const MembershipGrid& grid) {
  const std::size_t w = grid.resolution.width;
  os << "P4\n" << w << ' ' << grid.resolution.height << '\n';
  std::vector<char> row((w + 7) / 8);
  for (std::size_t y = 0; y < grid.resolution.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t x = 0; x < w; ++x) {
      if (grid.bounded(x, y)) row[x / 8] = static_cast<char>(row[x / 8] | (0x80 >> (x % 8)));
    }
    os.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline void write_metadata(std::ostream& os, const Metadata& meta) {
  for (const auto& [key, value] : meta) os << key << '=' << value << '\n';
}

/// Opens a file for writing or throws with the path in the message.
inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace stochadd
