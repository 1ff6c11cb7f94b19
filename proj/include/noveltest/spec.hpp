#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace noveltest {

// Canvas bounds shared by every game.
constexpr double kCanvasXMin = -240.0;
constexpr double kCanvasXMax = 240.0;
constexpr double kCanvasYMin = -180.0;
constexpr double kCanvasYMax = 180.0;
constexpr double kMaxProbeDistance = 600.0;

using Value = std::variant<double, std::string>;

inline bool is_number(const Value& v) { return std::holds_alternative<double>(v); }
inline double as_number(const Value& v) { return std::get<double>(v); }
inline const std::string& as_string(const Value& v) { return std::get<std::string>(v); }

struct Expr {
  enum class Kind { Number, String, Variable };
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string text;  // string literal or variable name

  static Expr num(double v) { return {Kind::Number, v, {}}; }
  static Expr str(std::string s) { return {Kind::String, 0.0, std::move(s)}; }
  static Expr var(std::string name) { return {Kind::Variable, 0.0, std::move(name)}; }
};

enum class CompareOp { Lt, Le, Gt, Ge, Eq };

struct Predicate {
  enum class Kind { Compare, TouchingSprite, TouchingColour, KeyPressed, StringEquals };
  Kind kind = Kind::Compare;
  CompareOp op = CompareOp::Lt;
  Expr lhs, rhs;        // Compare
  std::string a, b;     // TouchingSprite: sprite names; TouchingColour: a=sprite, b=colour
  std::string key;      // KeyPressed
  std::string variable; // StringEquals
  std::string literal;  // StringEquals

  static Predicate compare(Expr l, CompareOp o, Expr r) {
    Predicate p;
    p.kind = Kind::Compare;
    p.lhs = std::move(l);
    p.op = o;
    p.rhs = std::move(r);
    return p;
  }
  static Predicate touching_sprite(std::string sa, std::string sb) {
    Predicate p;
    p.kind = Kind::TouchingSprite;
    p.a = std::move(sa);
    p.b = std::move(sb);
    return p;
  }
  static Predicate touching_colour(std::string sprite, std::string colour) {
    Predicate p;
    p.kind = Kind::TouchingColour;
    p.a = std::move(sprite);
    p.b = std::move(colour);
    return p;
  }
  static Predicate key_pressed(std::string k) {
    Predicate p;
    p.kind = Kind::KeyPressed;
    p.key = std::move(k);
    return p;
  }
  static Predicate string_equals(std::string var, std::string lit) {
    Predicate p;
    p.kind = Kind::StringEquals;
    p.variable = std::move(var);
    p.literal = std::move(lit);
    return p;
  }
};

struct Statement {
  enum class Kind {
    MoveSteps,
    GoTo,
    PointInDirection,
    ChangeVariable,
    SetVariable,
    SwitchCostume,
    SwitchBackdrop,
    SetSize,
    Show,
    Hide,
    Say,
    Broadcast,
    If,
    Repeat,
    Forever,
    Wait,
    RandomRangeAssign,
    StopAll,
    DeclareWin,
    DeclareGameOver,
  };

  int id = -1;  // assigned in document order when omitted
  Kind kind = Kind::Say;
  double amount = 0.0;       // MoveSteps steps / PointInDirection degrees / SetSize percent
  double x = 0.0, y = 0.0;   // GoTo
  int index = 0;             // SwitchCostume / SwitchBackdrop / Repeat count / Wait ticks
  std::string name;          // variable name / broadcast tag / say text
  Expr expr;                 // ChangeVariable delta / SetVariable value
  double lo = 0.0, hi = 0.0; // RandomRangeAssign
  Predicate pred;            // If
  std::vector<Statement> body;       // If-then / Repeat / Forever
  std::vector<Statement> else_body;  // If-else
};

namespace stmt {
inline Statement move_steps(double steps) {
  Statement s;
  s.kind = Statement::Kind::MoveSteps;
  s.amount = steps;
  return s;
}
inline Statement go_to(double x, double y) {
  Statement s;
  s.kind = Statement::Kind::GoTo;
  s.x = x;
  s.y = y;
  return s;
}
inline Statement point_in_direction(double deg) {
  Statement s;
  s.kind = Statement::Kind::PointInDirection;
  s.amount = deg;
  return s;
}
inline Statement change_variable(std::string name, Expr delta) {
  Statement s;
  s.kind = Statement::Kind::ChangeVariable;
  s.name = std::move(name);
  s.expr = std::move(delta);
  return s;
}
inline Statement set_variable(std::string name, Expr value) {
  Statement s;
  s.kind = Statement::Kind::SetVariable;
  s.name = std::move(name);
  s.expr = std::move(value);
  return s;
}
inline Statement switch_costume(int index) {
  Statement s;
  s.kind = Statement::Kind::SwitchCostume;
  s.index = index;
  return s;
}
inline Statement switch_backdrop(int index) {
  Statement s;
  s.kind = Statement::Kind::SwitchBackdrop;
  s.index = index;
  return s;
}
inline Statement set_size(double percent) {
  Statement s;
  s.kind = Statement::Kind::SetSize;
  s.amount = percent;
  return s;
}
inline Statement show() {
  Statement s;
  s.kind = Statement::Kind::Show;
  return s;
}
inline Statement hide() {
  Statement s;
  s.kind = Statement::Kind::Hide;
  return s;
}
inline Statement say(std::string text) {
  Statement s;
  s.kind = Statement::Kind::Say;
  s.name = std::move(text);
  return s;
}
inline Statement broadcast(std::string tag) {
  Statement s;
  s.kind = Statement::Kind::Broadcast;
  s.name = std::move(tag);
  return s;
}
inline Statement if_then(Predicate p, std::vector<Statement> then_body,
                         std::vector<Statement> else_body = {}) {
  Statement s;
  s.kind = Statement::Kind::If;
  s.pred = std::move(p);
  s.body = std::move(then_body);
  s.else_body = std::move(else_body);
  return s;
}
inline Statement repeat(int count, std::vector<Statement> body) {
  Statement s;
  s.kind = Statement::Kind::Repeat;
  s.index = count;
  s.body = std::move(body);
  return s;
}
inline Statement forever(std::vector<Statement> body) {
  Statement s;
  s.kind = Statement::Kind::Forever;
  s.body = std::move(body);
  return s;
}
inline Statement wait(int ticks) {
  Statement s;
  s.kind = Statement::Kind::Wait;
  s.index = ticks;
  return s;
}
inline Statement random_range_assign(std::string name, double lo, double hi) {
  Statement s;
  s.kind = Statement::Kind::RandomRangeAssign;
  s.name = std::move(name);
  s.lo = lo;
  s.hi = hi;
  return s;
}
inline Statement stop_all() {
  Statement s;
  s.kind = Statement::Kind::StopAll;
  return s;
}
inline Statement declare_win() {
  Statement s;
  s.kind = Statement::Kind::DeclareWin;
  return s;
}
inline Statement declare_game_over() {
  Statement s;
  s.kind = Statement::Kind::DeclareGameOver;
  return s;
}
}  // namespace stmt

struct Costume {
  double width = 10.0;
  double height = 10.0;
  std::string colour;
};

struct SpriteSpec {
  std::string name;
  double x = 0.0, y = 0.0;
  double heading = 90.0;
  std::vector<Costume> costumes;
  int costume = 0;
  double size = 100.0;  // percent
  bool visible = true;
  std::map<std::string, Value> variables;
};

struct Trigger {
  enum class Kind { GameStart, KeyPressed, SpriteClicked, BroadcastReceived };
  Kind kind = Kind::GameStart;
  std::string arg;  // key / sprite / tag
};

// Owner "stage" means the script belongs to the stage.
constexpr const char* kStageOwner = "stage";

struct Script {
  std::string owner;
  Trigger trigger;
  int entry_id = -1;  // the script's hat statement id
  std::vector<Statement> body;
};

struct GameSpec {
  std::string name;
  int backdrops = 1;
  std::map<std::string, Value> globals;
  std::vector<SpriteSpec> sprites;
  std::vector<Script> scripts;
};

struct SpecError : std::runtime_error {
  int statement_id;
  SpecError(int id, const std::string& msg)
      : std::runtime_error("statement " + std::to_string(id) + ": " + msg), statement_id(id) {}
};

namespace detail {
template <typename Fn>
void for_each_statement(std::vector<Statement>& body, Fn&& fn) {
  for (auto& s : body) {
    fn(s);
    for_each_statement(s.body, fn);
    for_each_statement(s.else_body, fn);
  }
}
template <typename Fn>
void for_each_statement(const std::vector<Statement>& body, Fn&& fn) {
  for (const auto& s : body) {
    fn(s);
    for_each_statement(s.body, fn);
    for_each_statement(s.else_body, fn);
  }
}
}  // namespace detail

// Visits every statement of the spec in document order (per script: the
// entry, then the body depth-first, then-branch before else-branch).
template <typename Fn>
void for_each_statement(const GameSpec& spec, Fn&& fn) {
  for (const auto& sc : spec.scripts) detail::for_each_statement(sc.body, fn);
}

// Assigns ids in document order to every statement (and script entry)
// whose id is still -1. Existing ids are kept.
inline void assign_statement_ids(GameSpec& spec) {
  int next = 0;
  std::set<int> used;
  for (const auto& sc : spec.scripts) {
    if (sc.entry_id >= 0) used.insert(sc.entry_id);
  }
  for_each_statement(spec, [&](const Statement& s) {
    if (s.id >= 0) used.insert(s.id);
  });
  auto fresh = [&] {
    while (used.count(next)) ++next;
    used.insert(next);
    return next;
  };
  for (auto& sc : spec.scripts) {
    if (sc.entry_id < 0) sc.entry_id = fresh();
    detail::for_each_statement(sc.body, [&](Statement& s) {
      if (s.id < 0) s.id = fresh();
    });
  }
}

// Body statements only; script entry (hat) ids are excluded from the
// coverage denominator.
inline int total_statement_count(const GameSpec& spec) {
  int n = 0;
  for_each_statement(spec, [&](const Statement&) { ++n; });
  return n;
}

inline std::set<int> all_statement_ids(const GameSpec& spec) {
  std::set<int> ids;
  for (const auto& sc : spec.scripts) ids.insert(sc.entry_id);
  for_each_statement(spec, [&](const Statement& s) { ids.insert(s.id); });
  return ids;
}

}  // namespace noveltest
