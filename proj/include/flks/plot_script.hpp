#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "flks/errors.hpp"

namespace flks {

enum class PlotKind { Trajectory, Profile, Report };

namespace plot_detail {

inline const char* preamble = R"py(import sys
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = sys.argv[1] if len(sys.argv) > 1 else CSV_PATH
png_path = csv_path.rsplit(".", 1)[0] + ".png"


def load(path):
    with open(path) as f:
        lines = [line for line in f if not line.startswith("#")]
    return np.genfromtxt(lines, delimiter=",", names=True)
)py";

inline const char* trajectory = R"py(
data = load(csv_path)
t = np.unique(data["t"])
x = np.unique(data["x"])
u = data["u"].reshape(len(t), len(x))

x_slice = 0.7
k = int(np.argmin(np.abs(x - x_slice)))

fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4.2))
left.plot(t, u[:, k], color="k")
left.set_xlabel("t")
left.set_ylabel("u(x=%.3g, t)" % x[k])
left.set_title("time slice")
cs = right.contourf(x, t, u, levels=30, cmap="viridis")
fig.colorbar(cs, ax=right, label="u")
right.set_xlabel("x")
right.set_ylabel("t")
right.set_title("contour of u(x, t)")
fig.tight_layout()
fig.savefig(png_path, dpi=150)
)py";

inline const char* profile = R"py(
data = load(csv_path)
names = data.dtype.names
fig, ax = plt.subplots(figsize=(7, 4.2))
for name in names[1:]:
    ax.plot(data[names[0]], data[name], label=name)
ax.set_xlabel(names[0])
ax.legend()
fig.tight_layout()
fig.savefig(png_path, dpi=150)
)py";

inline const char* report = R"py(
import csv
keys, values = [], []
with open(csv_path) as f:
    rows = list(csv.reader(line for line in f if not line.startswith("#")))
for key, value in rows[1:]:
    try:
        values.append(float(value))
        keys.append(key)
    except ValueError:
        pass
fig, ax = plt.subplots(figsize=(8, max(2.5, 0.3 * len(keys))))
mags = np.abs(np.array(values, dtype=float))
ax.barh(range(len(keys)), np.where(mags > 0, mags, np.nan), color="steelblue")
ax.set_yticks(range(len(keys)))
ax.set_yticklabels(keys, fontsize=7)
ax.set_xscale("log")
ax.set_xlabel("|value|")
fig.tight_layout()
fig.savefig(png_path, dpi=150)
)py";

inline std::string quote(const std::string& s) {
  std::string o = "\"";
  for (char c : s) o += (c == '\\' || c == '"') ? std::string("\\") + c : std::string(1, c);
  return o + "\"";
}

} // namespace plot_detail

/// Standalone matplotlib script for a CSV written by export_csv. Trajectories
/// get a time slice at x = 0.7 beside a contour of u(x, t); profiles a line
/// plot; reports a bar chart of numeric entries.
inline std::string plot_script_text(PlotKind kind, const std::string& csv_path) {
  std::string s = std::string("CSV_PATH = ") + plot_detail::quote(csv_path) + "\n" + plot_detail::preamble;
  switch (kind) {
  case PlotKind::Trajectory: s += plot_detail::trajectory; break;
  case PlotKind::Profile: s += plot_detail::profile; break;
  case PlotKind::Report: s += plot_detail::report; break;
  }
  return s;
}

inline void emit_plot_script(PlotKind kind, const std::string& csv_path, const std::string& script_path) {
  if (!std::filesystem::exists(csv_path)) throw IoError(csv_path, "CSV file not found");
  std::ofstream f(script_path, std::ios::binary);
  if (!f) throw IoError(script_path, "cannot open for writing");
  f << plot_script_text(kind, csv_path);
  if (!f) throw IoError(script_path, "write failed");
}

} // namespace flks
