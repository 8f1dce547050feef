#include <charconv>
#include <fstream>
#include <sstream>

#include "vecplan/autodiff.h"
#include "vecplan/error.h"

namespace vecplan {

namespace {
constexpr const char* kCheckpointHeader = "vecplan-checkpoint 1";
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void save_checkpoint(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCategory::kMissingFile, "cannot write checkpoint " + path.string());
  }
  out << kCheckpointHeader << '\n';
  for (const auto& [name, t] : tensors) {
    out << name << ' ' << t.rows() << ' ' << t.cols();
    for (double v : t.values()) out << ' ' << format_double(v);
    out << '\n';
  }
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kMissingFile, "cannot open checkpoint " + path.string());
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCategory::kParse,
                path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  if (!std::getline(in, line) || line != kCheckpointHeader) {
    fail("expected header '" + std::string(kCheckpointHeader) + "'");
  }
  NamedTensors out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(fields >> name >> rows >> cols)) fail("expected 'name rows cols values...'");
    std::vector<double> data;
    data.reserve(rows * cols);
    std::string token;
    while (fields >> token) {
      double v = 0.0;
      const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        fail("tensor '" + name + "': bad number '" + token + "'");
      }
      data.push_back(v);
    }
    if (data.size() != rows * cols) {
      fail("tensor '" + name + "': expected " + std::to_string(rows * cols) + " values, got " +
           std::to_string(data.size()));
    }
    out.emplace_back(name, Tensor(rows, cols, std::move(data)));
  }
  return out;
}

}  // namespace vecplan
