#include "gbfuzz/target_vm.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>

namespace gbf {

const char* to_string(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
  }
  return "?";
}

bool eval_cmp(CmpOp op, uint64_t lhs, uint64_t rhs) {
  switch (op) {
    case CmpOp::Eq: return lhs == rhs;
    case CmpOp::Ne: return lhs != rhs;
    case CmpOp::Lt: return lhs < rhs;
    case CmpOp::Le: return lhs <= rhs;
    case CmpOp::Gt: return lhs > rhs;
    case CmpOp::Ge: return lhs >= rhs;
  }
  return false;
}

CmpOp negate(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Gt: return CmpOp::Le;
    case CmpOp::Ge: return CmpOp::Lt;
  }
  return op;
}

uint64_t opaque_mix(uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

ParseError::ParseError(int line_, int col_, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line_) + ", col " +
                         std::to_string(col_) + ": " + msg),
      line(line_),
      col(col_) {}

namespace {

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

struct Token {
  enum class Kind { Ident, Int, Sym, End };
  Kind kind = Kind::End;
  std::string text;
  uint64_t value = 0;
  int col = 0;
};

class LineLexer {
 public:
  LineLexer(std::string_view text, int line) : text_(text), line_(line) {}

  Token next() {
    skip_ws();
    Token t;
    t.col = static_cast<int>(pos_) + 1;
    if (pos_ >= text_.size() || text_[pos_] == '#') {
      t.kind = Token::Kind::End;
      return t;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      uint64_t v = 0;
      if (c == '0' && pos_ + 1 < text_.size() &&
          (text_[pos_ + 1] == 'x' || text_[pos_ + 1] == 'X')) {
        pos_ += 2;
        if (pos_ >= text_.size() ||
            !std::isxdigit(static_cast<unsigned char>(text_[pos_]))) {
          fail(t.col, "malformed hex literal");
        }
        while (pos_ < text_.size() &&
               std::isxdigit(static_cast<unsigned char>(text_[pos_]))) {
          v = v * 16 + hexval(text_[pos_]);
          ++pos_;
        }
      } else {
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          v = v * 10 + (text_[pos_] - '0');
          ++pos_;
        }
      }
      t.kind = Token::Kind::Int;
      t.value = v;
      t.text = std::string(text_.substr(start, pos_ - start));
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_')) {
        ++pos_;
      }
      t.kind = Token::Kind::Ident;
      t.text = std::string(text_.substr(start, pos_ - start));
      return t;
    }
    // Two-character operators first.
    static const char* two[] = {"==", "!=", "<=", ">=", "<<", ">>"};
    for (const char* s : two) {
      if (text_.substr(pos_, 2) == s) {
        t.kind = Token::Kind::Sym;
        t.text = s;
        pos_ += 2;
        return t;
      }
    }
    static const std::string one = "=<>{}()[]:+-*/%&|^";
    if (one.find(c) != std::string::npos) {
      t.kind = Token::Kind::Sym;
      t.text = std::string(1, c);
      ++pos_;
      return t;
    }
    fail(t.col, std::string("unexpected character '") + c + "'");
    return t;
  }

  [[noreturn]] void fail(int col, const std::string& msg) const {
    throw ParseError(line_, col, msg);
  }

 private:
  static int hexval(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return c - 'A' + 10;
  }
  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }
  std::string_view text_;
  size_t pos_ = 0;
  int line_;
};

struct TokenStream {
  std::vector<Token> toks;
  size_t pos = 0;
  int line = 0;

  const Token& peek() const { return toks[pos]; }
  const Token& get() { return toks[pos].kind == Token::Kind::End ? toks[pos] : toks[pos++]; }
  bool at_end() const { return toks[pos].kind == Token::Kind::End; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line, toks[pos].col, msg);
  }
  void expect_sym(const std::string& s) {
    if (peek().kind != Token::Kind::Sym || peek().text != s) {
      fail("expected '" + s + "'");
    }
    ++pos;
  }
  uint64_t expect_int(const std::string& what) {
    if (peek().kind != Token::Kind::Int) fail("expected " + what);
    return get().value;
  }
};

TokenStream lex_line(std::string_view text, int line) {
  TokenStream ts;
  ts.line = line;
  LineLexer lx(text, line);
  for (;;) {
    Token t = lx.next();
    bool end = t.kind == Token::Kind::End;
    ts.toks.push_back(std::move(t));
    if (end) break;
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct ParserState {
  TargetProgram* prog;
  std::map<std::string, int> symtab;          // name -> var index
  std::map<std::string, uint8_t> var_widths;  // width of latest definition
  std::map<std::string, int> def_counts;
  std::map<std::string, const Expr*> first_def;
  std::vector<std::string> var_names;
  bool saw_input = false;

  int var_index(const std::string& name, TokenStream& ts, bool must_exist) {
    auto it = symtab.find(name);
    if (it != symtab.end()) return it->second;
    if (must_exist) ts.fail("use of undefined variable '" + name + "'");
    int idx = static_cast<int>(var_names.size());
    symtab[name] = idx;
    var_names.push_back(name);
    return idx;
  }
};

std::optional<CmpOp> cmp_from(const std::string& s) {
  if (s == "==" || s == "=") return CmpOp::Eq;
  if (s == "!=") return CmpOp::Ne;
  if (s == "<") return CmpOp::Lt;
  if (s == "<=") return CmpOp::Le;
  if (s == ">") return CmpOp::Gt;
  if (s == ">=") return CmpOp::Ge;
  return std::nullopt;
}

uint8_t const_width(uint64_t v) {
  uint8_t w = 1;
  while (w < 8 && v > ((w >= 8) ? ~uint64_t{0} : ((uint64_t{1} << (8 * w)) - 1))) {
    ++w;
  }
  return w;
}

ExprPtr parse_arith(TokenStream& ts, ParserState& st);

ExprPtr parse_factor(TokenStream& ts, ParserState& st) {
  const Token& t = ts.peek();
  if (t.kind == Token::Kind::Int) {
    auto e = std::make_unique<Expr>();
    e->kind = Expr::Kind::Const;
    e->value = ts.get().value;
    e->width = const_width(e->value);
    return e;
  }
  if (t.kind == Token::Kind::Sym && t.text == "(") {
    ts.get();
    auto e = parse_arith(ts, st);
    ts.expect_sym(")");
    return e;
  }
  if (t.kind == Token::Kind::Ident) {
    std::string name = ts.get().text;
    if (name == "x") {
      ts.expect_sym("[");
      uint64_t off = ts.expect_int("byte offset");
      uint64_t w = 1;
      if (ts.peek().kind == Token::Kind::Sym && ts.peek().text == ":") {
        ts.get();
        w = ts.expect_int("load width");
        if (w < 1 || w > 8) ts.fail("load width must be in [1,8]");
      }
      ts.expect_sym("]");
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Load;
      e->offset = static_cast<uint32_t>(off);
      e->load_width = static_cast<uint8_t>(w);
      e->width = e->load_width;
      return e;
    }
    if (name == "foo") {
      ts.expect_sym("(");
      auto arg = parse_arith(ts, st);
      ts.expect_sym(")");
      auto e = std::make_unique<Expr>();
      e->kind = Expr::Kind::Call;
      e->lhs = std::move(arg);
      e->width = 8;
      return e;
    }
    auto e = std::make_unique<Expr>();
    e->kind = Expr::Kind::Var;
    e->var = name;
    e->offset = static_cast<uint32_t>(st.var_index(name, ts, true));
    auto wit = st.var_widths.find(name);
    e->width = wit == st.var_widths.end() ? 8 : wit->second;
    return e;
  }
  ts.fail("expected expression");
}

ExprPtr parse_term(TokenStream& ts, ParserState& st) {
  auto e = parse_factor(ts, st);
  for (;;) {
    const Token& t = ts.peek();
    if (t.kind != Token::Kind::Sym) break;
    char op = 0;
    if (t.text == "*") op = '*';
    else if (t.text == "/") op = '/';
    else if (t.text == "%") op = '%';
    else if (t.text == "&") op = '&';
    else if (t.text == "|") op = '|';
    else if (t.text == "^") op = '^';
    else if (t.text == "<<") op = 'l';
    else if (t.text == ">>") op = 'r';
    else break;
    ts.get();
    auto rhs = parse_factor(ts, st);
    auto b = std::make_unique<Expr>();
    b->kind = Expr::Kind::Binary;
    b->binop = op;
    b->width = std::max(e->width, rhs->width);
    b->lhs = std::move(e);
    b->rhs = std::move(rhs);
    e = std::move(b);
  }
  return e;
}

ExprPtr parse_arith(TokenStream& ts, ParserState& st) {
  auto e = parse_term(ts, st);
  for (;;) {
    const Token& t = ts.peek();
    if (t.kind != Token::Kind::Sym || (t.text != "+" && t.text != "-")) break;
    char op = t.text[0];
    ts.get();
    auto rhs = parse_term(ts, st);
    auto b = std::make_unique<Expr>();
    b->kind = Expr::Kind::Binary;
    b->binop = op;
    b->width = std::max(e->width, rhs->width);
    b->lhs = std::move(e);
    b->rhs = std::move(rhs);
    e = std::move(b);
  }
  return e;
}

// Full expression: one optional comparison over arithmetic, yielding 0/1.
ExprPtr parse_expr(TokenStream& ts, ParserState& st) {
  auto e = parse_arith(ts, st);
  const Token& t = ts.peek();
  if (t.kind == Token::Kind::Sym) {
    if (auto op = cmp_from(t.text)) {
      ts.get();
      auto rhs = parse_arith(ts, st);
      auto c = std::make_unique<Expr>();
      c->kind = Expr::Kind::Cmp;
      c->cmp = *op;
      c->lhs = std::move(e);
      c->rhs = std::move(rhs);
      c->width = 1;
      return c;
    }
  }
  return e;
}

void register_def(ParserState& st, const std::string& name, const Expr& rhs) {
  st.var_widths[name] = rhs.width;
  st.def_counts[name] += 1;
  if (st.def_counts[name] == 1) st.first_def[name] = &rhs;
}

// Resolves the contiguous input bytes behind an operand that is a verbatim
// copy: either a bare load, or a variable whose single definition is one.
std::vector<uint32_t> resolve_source_bytes(const ParserState& st, const Expr& e) {
  const Expr* cur = &e;
  if (cur->kind == Expr::Kind::Var) {
    auto cit = st.def_counts.find(cur->var);
    if (cit == st.def_counts.end() || cit->second != 1) return {};
    cur = st.first_def.at(cur->var);
  }
  if (cur->kind != Expr::Kind::Load) return {};
  std::vector<uint32_t> bytes;
  for (uint8_t i = 0; i < cur->load_width; ++i) bytes.push_back(cur->offset + i);
  return bytes;
}

void assign_blocks(std::vector<Stmt>& stmts, uint32_t& counter) {
  for (Stmt& s : stmts) {
    if (s.kind == Stmt::Kind::If) {
      s.entry_block = counter++;
      s.join_block = counter++;
      assign_blocks(s.body, counter);
    } else if (s.kind == Stmt::Kind::Loop) {
      s.entry_block = counter++;  // loop head
      s.body_block = counter++;
      s.join_block = counter++;
      assign_blocks(s.body, counter);
    }
  }
}

void collect_sites(const ParserState& st, const std::vector<Stmt>& stmts,
                   std::vector<BranchSite>& out) {
  for (const Stmt& s : stmts) {
    if (s.kind == Stmt::Kind::If) {
      BranchSite site;
      site.line = s.line;
      site.op = s.op;
      site.constant = s.constant;
      site.operand_width = s.cond_lhs->width;
      site.is_loop = false;
      site.source_bytes = resolve_source_bytes(st, *s.cond_lhs);
      out.push_back(std::move(site));
      collect_sites(st, s.body, out);
    } else if (s.kind == Stmt::Kind::Loop) {
      BranchSite site;
      site.line = s.line;
      site.op = CmpOp::Gt;
      site.constant = 0;
      site.operand_width = s.value->width;
      site.is_loop = true;
      site.source_bytes = resolve_source_bytes(st, *s.value);
      out.push_back(std::move(site));
      collect_sites(st, s.body, out);
    }
  }
}

void check_loads(const Expr& e, size_t input_size, int line) {
  if (e.kind == Expr::Kind::Load) {
    if (static_cast<size_t>(e.offset) + e.load_width > input_size) {
      throw ParseError(line, 1, "byte load x[" + std::to_string(e.offset) +
                                    ":" + std::to_string(e.load_width) +
                                    "] exceeds input size " +
                                    std::to_string(input_size));
    }
  }
  if (e.lhs) check_loads(*e.lhs, input_size, line);
  if (e.rhs) check_loads(*e.rhs, input_size, line);
}

void check_all_loads(const std::vector<Stmt>& stmts, size_t input_size) {
  for (const Stmt& s : stmts) {
    if (s.value) check_loads(*s.value, input_size, static_cast<int>(s.line));
    if (s.cond_lhs) check_loads(*s.cond_lhs, input_size, static_cast<int>(s.line));
    check_all_loads(s.body, input_size);
  }
}

}  // namespace

TargetProgram parse_program(std::string_view source, std::string name) {
  TargetProgram prog;
  prog.name = std::move(name);
  prog.source = std::string(source);

  ParserState st;
  st.prog = &prog;

  // Stack of open blocks; top-level body at the bottom.
  std::vector<std::vector<Stmt>*> stack;
  stack.push_back(&prog.body);
  int open_line = 0;

  std::istringstream in(prog.source);
  std::string line_text;
  int line_no = 0;
  while (std::getline(in, line_text)) {
    ++line_no;
    TokenStream ts = lex_line(line_text, line_no);
    if (ts.at_end()) continue;

    const Token& head = ts.peek();
    if (head.kind == Token::Kind::Sym && head.text == "}") {
      ts.get();
      if (!ts.at_end()) ts.fail("unexpected tokens after '}'");
      if (stack.size() == 1) ts.fail("unmatched '}'");
      stack.pop_back();
      continue;
    }
    if (head.kind != Token::Kind::Ident) {
      ts.fail("expected a statement");
    }

    std::string kw = head.text;
    if (kw == "input") {
      ts.get();
      if (stack.size() != 1) ts.fail("input declaration must be top-level");
      if (st.saw_input) ts.fail("duplicate input declaration");
      uint64_t n = ts.expect_int("input size");
      if (n == 0) ts.fail("input size must be positive");
      prog.input_size = static_cast<size_t>(n);
      st.saw_input = true;
      if (!ts.at_end()) ts.fail("unexpected tokens after input declaration");
      continue;
    }

    Stmt s;
    s.line = static_cast<uint32_t>(line_no);
    if (kw == "let") {
      ts.get();
      if (ts.peek().kind != Token::Kind::Ident) ts.fail("expected variable name");
      std::string vname = ts.get().text;
      if (vname == "x" || vname == "foo" || vname == "let" || vname == "if" ||
          vname == "loop" || vname == "crash" || vname == "input") {
        ts.fail("'" + vname + "' is reserved");
      }
      ts.expect_sym("=");
      s.kind = Stmt::Kind::Let;
      s.value = parse_expr(ts, st);
      register_def(st, vname, *s.value);
      s.name = vname;
      s.var_slot = static_cast<uint32_t>(st.var_index(vname, ts, false));
      if (!ts.at_end()) ts.fail("unexpected tokens after let statement");
      stack.back()->push_back(std::move(s));
      continue;
    }
    if (kw == "if") {
      ts.get();
      s.kind = Stmt::Kind::If;
      s.cond_lhs = parse_arith(ts, st);
      auto op = ts.peek().kind == Token::Kind::Sym ? cmp_from(ts.peek().text)
                                                   : std::nullopt;
      if (!op) ts.fail("expected comparison operator");
      ts.get();
      s.op = *op;
      s.constant = ts.expect_int("comparison constant");
      ts.expect_sym("{");
      if (!ts.at_end()) ts.fail("unexpected tokens after '{'");
      stack.back()->push_back(std::move(s));
      stack.push_back(&stack.back()->back().body);
      open_line = line_no;
      continue;
    }
    if (kw == "loop") {
      ts.get();
      s.kind = Stmt::Kind::Loop;
      s.value = parse_arith(ts, st);
      ts.expect_sym("{");
      if (!ts.at_end()) ts.fail("unexpected tokens after '{'");
      stack.back()->push_back(std::move(s));
      stack.push_back(&stack.back()->back().body);
      open_line = line_no;
      continue;
    }
    if (kw == "crash") {
      ts.get();
      s.kind = Stmt::Kind::Crash;
      s.site = static_cast<uint32_t>(ts.expect_int("crash site id"));
      if (!ts.at_end()) ts.fail("unexpected tokens after crash statement");
      stack.back()->push_back(std::move(s));
      continue;
    }
    ts.fail("unknown statement '" + kw + "'");
  }

  if (stack.size() != 1) {
    throw ParseError(open_line, 1, "unclosed block");
  }
  if (!st.saw_input) {
    throw ParseError(line_no, 1, "missing input declaration");
  }
  check_all_loads(prog.body, prog.input_size);

  uint32_t counter = 2;  // 0 = entry, 1 = exit
  assign_blocks(prog.body, counter);
  prog.block_count = counter;
  collect_sites(st, prog.body, prog.branch_sites);
  return prog;
}

void TargetProgram::assign_labels(int label_count, int label_bits, Rng& rng) {
  if (label_count < 1) throw std::invalid_argument("label_count must be >= 1");
  if (label_bits < 1 || label_bits > 32) {
    throw std::invalid_argument("label_bits must be in [1,32]");
  }
  labels.assign(label_count, std::vector<uint32_t>(block_count));
  const uint64_t space = uint64_t{1} << label_bits;
  for (auto& table : labels) {
    for (auto& l : table) l = static_cast<uint32_t>(rng.below(space));
  }
}

const BranchSite* TargetProgram::site(uint32_t line) const {
  for (const auto& s : branch_sites) {
    if (s.line == line) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

// Loop trip counts clamp here so a miswritten program cannot hang the VM.
constexpr uint64_t kMaxLoopTrips = 1 << 16;

struct ExecCtx {
  const TargetProgram& prog;
  std::span<const uint8_t> input;
  ExecMode mode;
  const std::vector<BranchRecord>* forced;
  ExecutionResult& out;
  std::vector<uint64_t> vars;
  size_t forced_pos = 0;
  uint32_t cur_block = 0;
  uint32_t cur_line = 0;
  bool stopped = false;

  void crash(uint32_t site) {
    out.outcome = Outcome::Crash;
    out.crash_site = site;
    stopped = true;
  }
  void diverge() {
    out.outcome = Outcome::ForcedDivergence;
    stopped = true;
  }
  void edge(uint32_t a, uint32_t b) { out.edges.emplace_back(a, b); }

  // Consumes the next forced decision; checks that it belongs to this site.
  const BranchRecord* next_forced(uint32_t line, bool is_loop) {
    if (forced_pos >= forced->size()) {
      diverge();
      return nullptr;
    }
    const BranchRecord& r = (*forced)[forced_pos++];
    if (r.branch_id != line || r.is_loop != is_loop) {
      diverge();
      return nullptr;
    }
    return &r;
  }
};

uint64_t eval(const Expr& e, ExecCtx& c) {
  switch (e.kind) {
    case Expr::Kind::Const:
      return e.value;
    case Expr::Kind::Var:
      return c.vars[e.offset];
    case Expr::Kind::Load: {
      uint64_t v = 0;
      for (int i = e.load_width - 1; i >= 0; --i) {
        v = (v << 8) | c.input[e.offset + i];
      }
      return v;
    }
    case Expr::Kind::Call:
      return opaque_mix(eval(*e.lhs, c));
    case Expr::Kind::Cmp: {
      uint64_t l = eval(*e.lhs, c);
      if (c.stopped) return 0;
      uint64_t r = eval(*e.rhs, c);
      return eval_cmp(e.cmp, l, r) ? 1 : 0;
    }
    case Expr::Kind::Binary: {
      uint64_t l = eval(*e.lhs, c);
      if (c.stopped) return 0;
      uint64_t r = eval(*e.rhs, c);
      if (c.stopped) return 0;
      switch (e.binop) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        case '/':
          if (r == 0) {
            c.crash(c.cur_line);
            return 0;
          }
          return l / r;
        case '%':
          if (r == 0) {
            c.crash(c.cur_line);
            return 0;
          }
          return l % r;
        case '&': return l & r;
        case '|': return l | r;
        case '^': return l ^ r;
        case 'l': return r >= 64 ? 0 : l << r;
        case 'r': return r >= 64 ? 0 : l >> r;
      }
      return 0;
    }
  }
  return 0;
}

void exec_stmts(const std::vector<Stmt>& stmts, ExecCtx& c) {
  for (const Stmt& s : stmts) {
    if (c.stopped) return;
    c.out.duration++;
    c.cur_line = s.line;
    switch (s.kind) {
      case Stmt::Kind::Let: {
        uint64_t v = eval(*s.value, c);
        if (c.stopped) return;
        c.vars[s.var_slot] = v;
        break;
      }
      case Stmt::Kind::Crash:
        c.crash(s.site);
        return;
      case Stmt::Kind::If: {
        uint64_t lhs = eval(*s.cond_lhs, c);
        if (c.stopped) return;
        bool taken;
        if (c.mode == ExecMode::Forced) {
          const BranchRecord* r = c.next_forced(s.line, false);
          if (!r) return;
          taken = r->taken;
        } else {
          taken = eval_cmp(s.op, lhs, s.constant);
        }
        if (c.mode != ExecMode::Normal) {
          c.out.trace.push_back({s.line, lhs, s.constant, s.op,
                                 s.cond_lhs->width, taken, false});
        }
        c.edge(c.cur_block, taken ? s.entry_block : s.join_block);
        if (taken) {
          c.cur_block = s.entry_block;
          exec_stmts(s.body, c);
          if (c.stopped) return;
          c.edge(c.cur_block, s.join_block);
        }
        c.cur_block = s.join_block;
        break;
      }
      case Stmt::Kind::Loop: {
        uint64_t n = eval(*s.value, c);
        if (c.stopped) return;
        if (n > kMaxLoopTrips) n = kMaxLoopTrips;
        const uint32_t head = s.entry_block;
        c.edge(c.cur_block, head);
        c.cur_block = head;
        for (uint64_t i = 0;; ++i) {
          c.out.duration++;
          bool taken;
          if (c.mode == ExecMode::Forced) {
            const BranchRecord* r = c.next_forced(s.line, true);
            if (!r) return;
            taken = r->taken;
          } else {
            taken = n > i;
          }
          if (c.mode != ExecMode::Normal) {
            c.out.trace.push_back({s.line, n, i, CmpOp::Gt, s.value->width,
                                   taken, true});
          }
          if (!taken) break;
          c.edge(head, s.body_block);
          c.cur_block = s.body_block;
          exec_stmts(s.body, c);
          if (c.stopped) return;
          c.edge(c.cur_block, head);
          c.cur_block = head;
        }
        c.edge(head, s.join_block);
        c.cur_block = s.join_block;
        break;
      }
    }
  }
}

size_t count_vars(const std::vector<Stmt>& stmts, size_t acc) {
  for (const Stmt& s : stmts) {
    if (s.kind == Stmt::Kind::Let) acc = std::max(acc, size_t{s.var_slot} + 1);
    acc = count_vars(s.body, acc);
  }
  return acc;
}

}  // namespace

void ExecutionResult::clear() {
  trace.clear();
  edges.clear();
  outcome = Outcome::Normal;
  crash_site = 0;
  duration = 0;
}

void execute_into(const TargetProgram& program, std::span<const uint8_t> input,
                  ExecMode mode, const std::vector<BranchRecord>* forced_trace,
                  ExecutionResult& out) {
  if (input.size() != program.input_size) {
    throw std::invalid_argument("input length " + std::to_string(input.size()) +
                                " does not match program input size " +
                                std::to_string(program.input_size));
  }
  if ((mode == ExecMode::Forced) != (forced_trace != nullptr)) {
    throw std::invalid_argument(
        "forced_trace must be supplied iff mode is Forced");
  }
  out.clear();
  out.duration = 1;

  ExecCtx ctx{program, input, mode, forced_trace, out};
  ctx.vars.assign(count_vars(program.body, 0), 0);
  exec_stmts(program.body, ctx);
  if (!ctx.stopped && mode == ExecMode::Forced &&
      ctx.forced_pos != forced_trace->size()) {
    // The stored trace outlived the program: length mismatch.
    out.outcome = Outcome::ForcedDivergence;
  }
  // Every run ends with a transition into the exit block.
  out.edges.emplace_back(ctx.cur_block, 1u);
}

ExecutionResult execute(const TargetProgram& program,
                        std::span<const uint8_t> input, ExecMode mode,
                        const std::vector<BranchRecord>* forced_trace) {
  ExecutionResult out;
  execute_into(program, input, mode, forced_trace, out);
  return out;
}

}  // namespace gbf
