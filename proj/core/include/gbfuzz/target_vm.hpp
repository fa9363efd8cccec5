#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gbfuzz/rng.hpp"

namespace gbf {

enum class CmpOp : uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

const char* to_string(CmpOp op);
bool eval_cmp(CmpOp op, uint64_t lhs, uint64_t rhs);
// Logical negation: Eq<->Ne, Lt<->Ge, Le<->Gt.
CmpOp negate(CmpOp op);

// Fixed avalanche mixer backing the opaque DSL function foo(). Any change to
// the argument flips the output unpredictably, so branches on foo() values
// can only be satisfied by chance, never by distance minimization.
uint64_t opaque_mix(uint64_t x);

struct ParseError : std::runtime_error {
  ParseError(int line, int col, const std::string& msg);
  int line;
  int col;
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  enum class Kind : uint8_t { Const, Var, Load, Binary, Cmp, Call };
  Kind kind = Kind::Const;
  uint64_t value = 0;        // Const
  std::string var;           // Var
  uint32_t offset = 0;       // Load
  uint8_t load_width = 1;    // Load
  char binop = 0;            // Binary: + - * / % & | ^ and 'l' (<<), 'r' (>>)
  CmpOp cmp = CmpOp::Eq;     // Cmp
  ExprPtr lhs, rhs;          // Binary/Cmp (Call uses lhs as the argument)
  uint8_t width = 1;         // nominal operand width in bytes, computed at parse
};

struct Stmt {
  enum class Kind : uint8_t { Let, If, Loop, Crash };
  Kind kind = Kind::Let;
  uint32_t line = 0;

  std::string name;  // Let
  ExprPtr value;     // Let rhs, Loop count

  ExprPtr cond_lhs;  // If
  CmpOp op = CmpOp::Eq;
  uint64_t constant = 0;

  std::vector<Stmt> body;    // If / Loop
  uint32_t entry_block = 0;  // If: then-entry, Loop: head
  uint32_t body_block = 0;   // Loop: body entry
  uint32_t join_block = 0;

  uint32_t site = 0;      // Crash
  uint32_t var_slot = 0;  // Let
};

// Static description of one conditional (or loop continuation test).
struct BranchSite {
  uint32_t line = 0;
  CmpOp op = CmpOp::Eq;
  uint64_t constant = 0;
  uint8_t operand_width = 1;
  bool is_loop = false;
  // Input offsets backing the operand when it is a verbatim byte copy.
  // Oracle metadata for tests only; inference code never reads it.
  std::vector<uint32_t> source_bytes;
};

struct TargetProgram {
  std::string name;
  std::string source;
  size_t input_size = 0;
  std::vector<Stmt> body;
  uint32_t block_count = 0;  // block 0 = entry, block 1 = exit
  std::vector<BranchSite> branch_sites;

  // labels[i] is the i-th label table, one label per basic block, drawn
  // uniformly from [0, 2^label_bits) at assignment time.
  std::vector<std::vector<uint32_t>> labels;

  void assign_labels(int label_count, int label_bits, Rng& rng);
  int label_count() const { return static_cast<int>(labels.size()); }
  const BranchSite* site(uint32_t line) const;
};

// Parses the textual program format. One statement per line:
//   input <n>
//   let <var> = <expr>
//   if <expr> <cmp> <const> {
//   loop <expr> {
//   crash <id>
//   }
// Byte loads are written x[<offset>] or x[<offset>:<width>] (little-endian).
// Unknown constructs are rejected with line/column diagnostics.
TargetProgram parse_program(std::string_view source, std::string name = "");

enum class ExecMode : uint8_t { Normal, Record, Forced };
enum class Outcome : uint8_t { Normal, Crash, ForcedDivergence };

struct BranchRecord {
  uint32_t branch_id = 0;  // source line of the conditional
  uint64_t lhs_value = 0;
  uint64_t rhs_value = 0;
  CmpOp op = CmpOp::Eq;
  uint8_t operand_width = 1;
  bool taken = false;
  bool is_loop = false;  // loop continuation test; rhs_value is the iteration index
};

using Edge = std::pair<uint32_t, uint32_t>;

struct ExecutionResult {
  std::vector<BranchRecord> trace;  // filled in Record and Forced modes
  std::vector<Edge> edges;
  Outcome outcome = Outcome::Normal;
  uint32_t crash_site = 0;
  uint64_t duration = 0;  // executed statement count, always > 0

  void clear();
};

// Executes the program on the given input. The input length must equal
// program.input_size. In Forced mode every conditional takes the taken edge
// stored in forced_trace regardless of the current condition value; runs that
// exhaust or outlive the stored trace end with Outcome::ForcedDivergence.
ExecutionResult execute(const TargetProgram& program,
                        std::span<const uint8_t> input,
                        ExecMode mode = ExecMode::Normal,
                        const std::vector<BranchRecord>* forced_trace = nullptr);

// Same as execute() but reuses the buffers of an existing result object.
void execute_into(const TargetProgram& program, std::span<const uint8_t> input,
                  ExecMode mode, const std::vector<BranchRecord>* forced_trace,
                  ExecutionResult& out);

}  // namespace gbf
