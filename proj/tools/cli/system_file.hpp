#pragma once

// Named-matrix text files.
//
//   # comment
//   A:
//     1  0.5 -1
//     0.3, 0.5, -0.6
//   poles: -2, -1+2i, -1-2i
//
// A key line is `Name:` with optional values on the same line; every
// following non-blank line up to the next key is one row. Entries are
// separated by whitespace and/or commas. Complex entries are written
// without spaces, as in 3, -1.5+2i, 4j or -i.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "targetctl/analysis.hpp"
#include "targetctl/errors.hpp"
#include "targetctl/matops.hpp"

namespace targetctl::cli {

class ParseError : public InputError {
 public:
  ParseError(const std::string& source, int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class Document {
 public:
  struct Row {
    int line = 0;
    std::vector<std::string> tokens;
  };
  struct Block {
    std::string key;
    int line = 0;
    std::vector<Row> rows;
  };

  static Document parse(std::istream& in, const std::string& source);
  static Document load(const std::string& path);

  const std::string& source() const noexcept { return source_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  bool has(std::string_view key) const;
  const Block& block(std::string_view key) const;

  /// Throws ParseError for keys outside `allowed`.
  void restrict_keys(const std::vector<std::string>& allowed) const;

  Matrix matrix(std::string_view key) const;
  std::optional<Matrix> optional_matrix(std::string_view key) const;
  /// All rows of the block, flattened.
  ComplexList complex_list(std::string_view key) const;

 private:
  std::string source_;
  std::vector<Block> blocks_;
};

/// Parses one real or complex entry; nullopt if malformed.
std::optional<Complex> parse_complex(std::string_view token);
std::optional<double> parse_double(std::string_view token);

/// Comma/whitespace separated complex list, as accepted by --poles.
ComplexList parse_complex_list(std::string_view text);
Vector parse_vector(std::string_view text);

/// Shortest decimal that reads back to the same double.
std::string format_double(double value);
std::string format_complex(Complex value);

void write_matrix(std::ostream& out, std::string_view key, const Matrix& m);
void write_complex_list(std::ostream& out, std::string_view key, const ComplexList& values);

struct SystemFile {
  std::string source;
  Matrix a;
  Matrix b;
  std::optional<Matrix> c;
  std::optional<Matrix> f;
  std::optional<Matrix> r;

  static SystemFile parse(std::istream& in, const std::string& source);
  static SystemFile load(const std::string& path);
  void write(std::ostream& out) const;

  LinearSystem system(const ToleranceConfig& tol = {}) const;
  /// F when present, otherwise C.
  const Matrix& target() const;
  bool target_is_output() const noexcept { return !f.has_value(); }
};

struct DesignFile {
  std::string source;
  Matrix z;
  std::optional<Matrix> r;
  ComplexList poles;

  static DesignFile parse(std::istream& in, const std::string& source);
  static DesignFile load(const std::string& path);
  void write(std::ostream& out) const;
};

}  // namespace targetctl::cli
