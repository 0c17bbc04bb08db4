#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "holokan/analysis.hpp"
#include "holokan/error.hpp"

namespace holokan {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError(std::string("cannot parse '") + std::string(s) + "' as a number for " + std::string(what));
  return v;
}

/// Named columns over rows of text cells. Reals are stored in round-trip form.
class ResultTable {
 public:
  ResultTable() = default;
  explicit ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  class Row {
   public:
    Row& operator<<(const std::string& s) {
      cells_.push_back(s);
      return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }
    Row& operator<<(std::string_view s) { return *this << std::string(s); }
    Row& operator<<(double x) { return *this << format_real(x); }
    Row& operator<<(int x) { return *this << std::to_string(x); }
    Row& operator<<(long x) { return *this << std::to_string(x); }
    Row& operator<<(std::size_t x) { return *this << std::to_string(x); }

   private:
    friend class ResultTable;
    std::vector<std::string> cells_;
  };

  void add(const Row& row) { add_row(row.cells_); }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size())
      throw ConfigError("row has " + std::to_string(cells.size()) + " cells, table has " +
                        std::to_string(columns_.size()) + " columns");
    rows_.push_back(std::move(cells));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i] == name) return i;
    throw ConfigError("no column named '" + std::string(name) + "'");
  }

  const std::string& cell(std::size_t row, std::string_view name) const { return rows_.at(row).at(column(name)); }
  double real(std::size_t row, std::string_view name) const { return parse_real(cell(row, name), name); }

  std::string to_csv() const {
    std::string out;
    append_line(out, columns_);
    for (const auto& r : rows_) append_line(out, r);
    return out;
  }

  static ResultTable from_csv(std::string_view text) {
    std::vector<std::vector<std::string>> lines;
    std::vector<std::string> cur;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
      const char ch = text[i];
      if (quoted) {
        if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cell += ch;
        }
        continue;
      }
      any = true;
      if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        cur.push_back(std::move(cell));
        cell.clear();
      } else if (ch == '\n') {
        cur.push_back(std::move(cell));
        cell.clear();
        lines.push_back(std::move(cur));
        cur.clear();
        any = false;
      } else if (ch != '\r') {
        cell += ch;
      }
    }
    if (quoted) throw ConfigError("unterminated quote in CSV");
    if (any) {
      cur.push_back(std::move(cell));
      lines.push_back(std::move(cur));
    }
    if (lines.empty()) throw ConfigError("CSV has no header");
    ResultTable t(lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) t.add_row(std::move(lines[i]));
    return t;
  }

 private:
  static void append_line(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      const auto& c = cells[i];
      if (c.find_first_of(",\"\n\r") == std::string::npos) {
        out += c;
      } else {
        out += '"';
        for (char ch : c) {
          if (ch == '"') out += '"';
          out += ch;
        }
        out += '"';
      }
    }
    out += '\n';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file so a failed run leaves no partial output.
inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw ConfigError("cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_csv(const std::filesystem::path& path, const ResultTable& table) {
  write_text_file(path, table.to_csv());
}

inline ResultTable read_csv(const std::filesystem::path& path) { return ResultTable::from_csv(read_text_file(path)); }

/// Plain-text graymap of iteration counts: "P2", width height, maxval = max_iter.
inline std::string to_pgm(const EscapeMask& mask) {
  std::string out = "P2\n" + std::to_string(mask.nx) + " " + std::to_string(mask.ny) + "\n" +
                    std::to_string(mask.max_iter) + "\n";
  for (int r = 0; r < mask.ny; ++r) {
    for (int c = 0; c < mask.nx; ++c) {
      if (c) out += ' ';
      out += std::to_string(mask.iterations[static_cast<std::size_t>(r * mask.nx + c)]);
    }
    out += '\n';
  }
  return out;
}

struct Graymap {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::vector<int> pixels;
};

inline Graymap parse_pgm(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  Graymap g;
  if (!(in >> magic) || magic != "P2") throw ConfigError("not a plain PGM (missing P2 magic)");
  if (!(in >> g.width >> g.height >> g.maxval) || g.width < 0 || g.height < 0)
    throw ConfigError("malformed PGM header");
  g.pixels.resize(static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height));
  for (auto& p : g.pixels)
    if (!(in >> p)) throw ConfigError("PGM has fewer pixels than its header declares");
  return g;
}

}  // namespace holokan
