#include "system_file.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <sstream>

namespace targetctl::cli {

namespace {

std::string where(const std::string& source, int line) {
  std::ostringstream out;
  out << source;
  if (line > 0) out << ":" << line;
  return out.str();
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (const char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

int line_of(const Document& doc, std::string_view key) {
  return doc.has(key) ? doc.block(key).line : 0;
}

void require_columns(const Document& doc, std::string_view key, const Matrix& m, Index n) {
  if (m.cols() != n) {
    std::ostringstream msg;
    msg << key << " has " << m.cols() << " columns, expected " << n << " (one per state)";
    throw ParseError(doc.source(), line_of(doc, key), msg.str());
  }
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

}  // namespace

ParseError::ParseError(const std::string& source, int line, const std::string& message)
    : InputError(where(source, line) + ": " + message), line_(line) {}

Document Document::parse(std::istream& in, const std::string& source) {
  static const std::regex key_line(R"(^([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)$)");
  Document doc;
  doc.source_ = source;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;

    std::string rest;
    std::match_results<std::string_view::const_iterator> match;
    if (std::regex_match(text.begin(), text.end(), match, key_line)) {
      const std::string key = match[1].str();
      if (doc.has(key)) {
        throw ParseError(source, line,
                         "duplicate key " + key + " (first at line " +
                             std::to_string(doc.block(key).line) + ")");
      }
      doc.blocks_.push_back(Block{key, line, {}});
      rest = match[2].str();
    } else {
      if (doc.blocks_.empty()) throw ParseError(source, line, "values before any `Name:` key");
      rest = std::string(text);
    }
    std::vector<std::string> tokens = tokenize(rest);
    if (!tokens.empty()) doc.blocks_.back().rows.push_back(Row{line, std::move(tokens)});
  }
  return doc;
}

Document Document::load(const std::string& path) {
  std::ifstream in = open(path);
  return parse(in, path);
}

bool Document::has(std::string_view key) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const Block& b) { return b.key == key; });
}

const Document::Block& Document::block(std::string_view key) const {
  for (const Block& b : blocks_) {
    if (b.key == key) return b;
  }
  throw ParseError(source_, 0, "missing required key " + std::string(key));
}

void Document::restrict_keys(const std::vector<std::string>& allowed) const {
  for (const Block& b : blocks_) {
    if (std::find(allowed.begin(), allowed.end(), b.key) == allowed.end()) {
      std::string list;
      for (const auto& key : allowed) list += (list.empty() ? "" : ", ") + key;
      throw ParseError(source_, b.line, "unknown key " + b.key + " (expected one of " + list + ")");
    }
  }
}

Matrix Document::matrix(std::string_view key) const {
  const Block& b = block(key);
  if (b.rows.empty()) throw ParseError(source_, b.line, "matrix " + b.key + " has no rows");
  const auto cols = static_cast<Index>(b.rows.front().tokens.size());
  Matrix out(static_cast<Index>(b.rows.size()), cols);
  for (std::size_t i = 0; i < b.rows.size(); ++i) {
    const Row& row = b.rows[i];
    if (static_cast<Index>(row.tokens.size()) != cols) {
      std::ostringstream msg;
      msg << "row " << i + 1 << " of " << b.key << " has " << row.tokens.size()
          << " entries, expected " << cols;
      throw ParseError(source_, row.line, msg.str());
    }
    for (std::size_t j = 0; j < row.tokens.size(); ++j) {
      const auto value = parse_double(row.tokens[j]);
      if (!value) {
        std::ostringstream msg;
        msg << "row " << i + 1 << " of " << b.key << ": cannot read '" << row.tokens[j]
            << "' as a finite number";
        throw ParseError(source_, row.line, msg.str());
      }
      out(static_cast<Index>(i), static_cast<Index>(j)) = *value;
    }
  }
  return out;
}

std::optional<Matrix> Document::optional_matrix(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return matrix(key);
}

ComplexList Document::complex_list(std::string_view key) const {
  const Block& b = block(key);
  ComplexList out;
  for (const Row& row : b.rows) {
    for (const auto& token : row.tokens) {
      const auto value = parse_complex(token);
      if (!value) {
        throw ParseError(source_, row.line,
                         b.key + ": cannot read '" + token + "' as a complex number");
      }
      out.push_back(*value);
    }
  }
  return out;
}

std::optional<double> parse_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return std::nullopt;
  double value = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || end != token.data() + token.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::optional<Complex> parse_complex(std::string_view token) {
  if (token.empty()) return std::nullopt;
  const char last = token.back();
  if (last != 'i' && last != 'j') {
    const auto re = parse_double(token);
    if (!re) return std::nullopt;
    return Complex(*re, 0.0);
  }
  const std::string_view body = token.substr(0, token.size() - 1);
  std::size_t split = std::string_view::npos;
  for (std::size_t p = body.size(); p-- > 1;) {
    if ((body[p] == '+' || body[p] == '-') && body[p - 1] != 'e' && body[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  double re = 0.0;
  std::string_view im_text = body;
  if (split != std::string_view::npos) {
    const auto parsed = parse_double(body.substr(0, split));
    if (!parsed) return std::nullopt;
    re = *parsed;
    im_text = body.substr(split);
  }
  double im = 0.0;
  if (im_text.empty() || im_text == "+") {
    im = 1.0;
  } else if (im_text == "-") {
    im = -1.0;
  } else {
    const auto parsed = parse_double(im_text);
    if (!parsed) return std::nullopt;
    im = *parsed;
  }
  return Complex(re, im);
}

ComplexList parse_complex_list(std::string_view text) {
  ComplexList out;
  for (const auto& token : tokenize(text)) {
    const auto value = parse_complex(token);
    if (!value) throw InputError("cannot read '" + token + "' as a complex number");
    out.push_back(*value);
  }
  return out;
}

Vector parse_vector(std::string_view text) {
  const auto tokens = tokenize(text);
  Vector out(static_cast<Index>(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto value = parse_double(tokens[i]);
    if (!value) throw InputError("cannot read '" + tokens[i] + "' as a finite number");
    out(static_cast<Index>(i)) = *value;
  }
  return out;
}

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

std::string format_complex(Complex value) {
  if (value.imag() == 0.0) return format_double(value.real());
  std::string out = value.real() == 0.0 ? "" : format_double(value.real());
  if (value.imag() >= 0.0 && !out.empty()) out += '+';
  return out + format_double(value.imag()) + 'i';
}

void write_matrix(std::ostream& out, std::string_view key, const Matrix& m) {
  out << key << ":\n";
  for (Index i = 0; i < m.rows(); ++i) {
    out << " ";
    for (Index j = 0; j < m.cols(); ++j) out << ' ' << format_double(m(i, j));
    out << '\n';
  }
}

void write_complex_list(std::ostream& out, std::string_view key, const ComplexList& values) {
  out << key << ":";
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << (i == 0 ? " " : ", ") << format_complex(values[i]);
  }
  out << '\n';
}

SystemFile SystemFile::parse(std::istream& in, const std::string& source) {
  const Document doc = Document::parse(in, source);
  doc.restrict_keys({"A", "B", "C", "F", "R"});
  SystemFile out;
  out.source = source;
  out.a = doc.matrix("A");
  if (out.a.rows() != out.a.cols()) {
    std::ostringstream msg;
    msg << "A must be square, got " << out.a.rows() << "x" << out.a.cols();
    throw ParseError(source, line_of(doc, "A"), msg.str());
  }
  const Index n = out.a.rows();
  out.b = doc.matrix("B");
  if (out.b.rows() != n) {
    std::ostringstream msg;
    msg << "B has " << out.b.rows() << " rows, expected " << n << " (one per state)";
    throw ParseError(source, line_of(doc, "B"), msg.str());
  }
  out.c = doc.optional_matrix("C");
  out.f = doc.optional_matrix("F");
  out.r = doc.optional_matrix("R");
  if (out.c) require_columns(doc, "C", *out.c, n);
  if (out.f) require_columns(doc, "F", *out.f, n);
  if (out.r) require_columns(doc, "R", *out.r, n);
  if (!out.c && !out.f) {
    throw ParseError(source, 0, "need a target matrix F or an output matrix C");
  }

  const ToleranceConfig tol;
  if (out.c && rank(*out.c, tol).rank != out.c->rows()) {
    throw ParseError(source, line_of(doc, "C"), "C is not full row rank");
  }
  if (out.f && rank(*out.f, tol).rank != out.f->rows()) {
    throw ParseError(source, line_of(doc, "F"), "F is not full row rank");
  }
  return out;
}

SystemFile SystemFile::load(const std::string& path) {
  std::ifstream in = open(path);
  return parse(in, path);
}

void SystemFile::write(std::ostream& out) const {
  write_matrix(out, "A", a);
  write_matrix(out, "B", b);
  if (c) write_matrix(out, "C", *c);
  if (f) write_matrix(out, "F", *f);
  if (r && r->rows() > 0) write_matrix(out, "R", *r);
}

LinearSystem SystemFile::system(const ToleranceConfig& tol) const {
  return LinearSystem(a, b, c, tol);
}

const Matrix& SystemFile::target() const { return f ? *f : *c; }

DesignFile DesignFile::parse(std::istream& in, const std::string& source) {
  const Document doc = Document::parse(in, source);
  doc.restrict_keys({"Z", "R", "poles"});
  DesignFile out;
  out.source = source;
  out.z = doc.matrix("Z");
  out.r = doc.optional_matrix("R");
  if (doc.has("poles")) out.poles = doc.complex_list("poles");
  return out;
}

DesignFile DesignFile::load(const std::string& path) {
  std::ifstream in = open(path);
  return parse(in, path);
}

void DesignFile::write(std::ostream& out) const {
  write_matrix(out, "Z", z);
  if (r && r->rows() > 0) write_matrix(out, "R", *r);
  write_complex_list(out, "poles", poles);
}

}  // namespace targetctl::cli
