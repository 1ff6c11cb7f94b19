#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

#include "noveltest/rng.hpp"
#include "noveltest/spec.hpp"

namespace noveltest {

struct Action {
  enum class Kind { PressKey, ClickSprite, MoveMouse, Noop };
  Kind kind = Kind::Noop;
  std::string arg;        // key or sprite name
  int duration = 1;       // PressKey: ticks the key stays held
  double x = 0, y = 0;    // MoveMouse

  static Action press_key(std::string key, int duration) {
    Action a;
    a.kind = Kind::PressKey;
    a.arg = std::move(key);
    a.duration = duration;
    return a;
  }
  static Action click_sprite(std::string name) {
    Action a;
    a.kind = Kind::ClickSprite;
    a.arg = std::move(name);
    return a;
  }
  static Action move_mouse(double x, double y) {
    Action a;
    a.kind = Kind::MoveMouse;
    a.x = x;
    a.y = y;
    return a;
  }
  static Action noop() { return {}; }
};

struct FeatureDescriptor {
  enum class Kind {
    SpriteX,
    SpriteY,
    Heading,
    Costume,
    Size,
    SpriteVariable,
    DistanceToSprite,
    DistanceToColour,
    GlobalVariable,
  };
  Kind kind;
  int sprite = -1;     // index into spec.sprites, -1 for globals
  std::string name;    // variable name / probe target
  std::string label;   // human-readable, used in CSV dumps
};

struct FeatureSchema {
  std::vector<FeatureDescriptor> features;
  std::size_t dimension() const { return features.size(); }
};

using BehaviorVector = std::vector<double>;

// Validated spec plus everything derived from it. Immutable once built;
// safe to share between concurrently running episodes.
struct GameInstance {
  GameSpec spec;
  FeatureSchema schema;
  std::vector<Action> alphabet;          // press-keys (sorted), clicks (spec order), noop last
  std::map<std::string, int> sprite_index;
  std::map<std::string, double> max_size;  // per sprite: declared size maximum
  int total_statements = 0;
};

namespace detail {

inline void validate_expr(const Expr& e, int stmt_id, const GameSpec& spec,
                          const SpriteSpec* owner) {
  if (e.kind != Expr::Kind::Variable) return;
  if (owner && owner->variables.count(e.text)) return;
  if (spec.globals.count(e.text)) return;
  throw SpecError(stmt_id, "undeclared variable '" + e.text + "'");
}

inline void validate_variable_name(const std::string& name, int stmt_id, const GameSpec& spec,
                                   const SpriteSpec* owner) {
  if (owner && owner->variables.count(name)) return;
  if (spec.globals.count(name)) return;
  throw SpecError(stmt_id, "undeclared variable '" + name + "'");
}

inline const Value* find_declared(const std::string& name, const GameSpec& spec,
                                  const SpriteSpec* owner) {
  if (owner) {
    auto it = owner->variables.find(name);
    if (it != owner->variables.end()) return &it->second;
  }
  auto it = spec.globals.find(name);
  if (it != spec.globals.end()) return &it->second;
  return nullptr;
}

inline bool sprite_exists(const GameSpec& spec, const std::string& name) {
  for (const auto& s : spec.sprites)
    if (s.name == name) return true;
  return false;
}

inline bool colour_exists(const GameSpec& spec, const std::string& colour) {
  for (const auto& s : spec.sprites)
    for (const auto& c : s.costumes)
      if (c.colour == colour) return true;
  return false;
}

inline void validate_predicate(const Predicate& p, int stmt_id, const GameSpec& spec,
                               const SpriteSpec* owner) {
  switch (p.kind) {
    case Predicate::Kind::Compare:
      validate_expr(p.lhs, stmt_id, spec, owner);
      validate_expr(p.rhs, stmt_id, spec, owner);
      break;
    case Predicate::Kind::TouchingSprite:
      if (!sprite_exists(spec, p.a)) throw SpecError(stmt_id, "undeclared sprite '" + p.a + "'");
      if (!sprite_exists(spec, p.b)) throw SpecError(stmt_id, "undeclared sprite '" + p.b + "'");
      break;
    case Predicate::Kind::TouchingColour:
      if (!sprite_exists(spec, p.a)) throw SpecError(stmt_id, "undeclared sprite '" + p.a + "'");
      if (!colour_exists(spec, p.b)) throw SpecError(stmt_id, "undeclared colour '" + p.b + "'");
      break;
    case Predicate::Kind::KeyPressed:
      break;
    case Predicate::Kind::StringEquals: {
      const Value* v = find_declared(p.variable, spec, owner);
      if (!v) throw SpecError(stmt_id, "undeclared variable '" + p.variable + "'");
      if (is_number(*v))
        throw SpecError(stmt_id, "string-equals over numeric variable '" + p.variable + "'");
      break;
    }
  }
}

inline void validate_statement(const Statement& s, const GameSpec& spec, const SpriteSpec* owner) {
  using K = Statement::Kind;
  switch (s.kind) {
    case K::ChangeVariable:
    case K::SetVariable:
      validate_variable_name(s.name, s.id, spec, owner);
      validate_expr(s.expr, s.id, spec, owner);
      break;
    case K::RandomRangeAssign:
      validate_variable_name(s.name, s.id, spec, owner);
      break;
    case K::SwitchCostume:
      if (!owner) throw SpecError(s.id, "switch-costume on the stage");
      if (s.index < 0 || s.index >= static_cast<int>(owner->costumes.size()))
        throw SpecError(s.id, "costume index out of range");
      break;
    case K::SwitchBackdrop:
      if (s.index < 0 || s.index >= spec.backdrops)
        throw SpecError(s.id, "backdrop index out of range");
      break;
    case K::SetSize:
      if (s.amount <= 0) throw SpecError(s.id, "size must be positive");
      break;
    case K::If:
      validate_predicate(s.pred, s.id, spec, owner);
      break;
    default:
      break;
  }
}

}  // namespace detail

// Structural validation + schema/alphabet derivation. Throws SpecError
// naming the first offending statement id.
inline GameInstance load_game(GameSpec spec) {
  assign_statement_ids(spec);

  GameInstance inst;
  // Unique sprite names.
  for (std::size_t i = 0; i < spec.sprites.size(); ++i) {
    const auto& sp = spec.sprites[i];
    if (inst.sprite_index.count(sp.name))
      throw SpecError(-1, "duplicate sprite name '" + sp.name + "'");
    inst.sprite_index[sp.name] = static_cast<int>(i);
    if (sp.costumes.empty()) throw SpecError(-1, "sprite '" + sp.name + "' has no costume");
    if (sp.costume < 0 || sp.costume >= static_cast<int>(sp.costumes.size()))
      throw SpecError(-1, "sprite '" + sp.name + "' initial costume out of range");
    if (sp.size <= 0) throw SpecError(-1, "sprite '" + sp.name + "' size must be positive");
    if (sp.x < kCanvasXMin || sp.x > kCanvasXMax || sp.y < kCanvasYMin || sp.y > kCanvasYMax)
      throw SpecError(-1, "sprite '" + sp.name + "' starts outside the canvas");
  }
  if (spec.backdrops < 1) throw SpecError(-1, "backdrop count must be positive");

  // Unique statement ids.
  {
    std::set<int> seen;
    auto check = [&](int id) {
      if (!seen.insert(id).second)
        throw SpecError(id, "duplicate statement id");
    };
    for (const auto& sc : spec.scripts) check(sc.entry_id);
    for_each_statement(spec, [&](const Statement& s) { check(s.id); });
  }

  // Per-script statement validation; triggers reference declared entities.
  for (const auto& sc : spec.scripts) {
    const SpriteSpec* owner = nullptr;
    if (sc.owner != kStageOwner) {
      auto it = inst.sprite_index.find(sc.owner);
      if (it == inst.sprite_index.end())
        throw SpecError(sc.entry_id, "script owner '" + sc.owner + "' not declared");
      owner = &spec.sprites[it->second];
    }
    if (sc.trigger.kind == Trigger::Kind::SpriteClicked &&
        !inst.sprite_index.count(sc.trigger.arg))
      throw SpecError(sc.entry_id, "clicked sprite '" + sc.trigger.arg + "' not declared");
    detail::for_each_statement(sc.body, [&](const Statement& s) {
      detail::validate_statement(s, spec, owner);
    });
  }

  // Action alphabet: keys the spec listens to (triggers and key-pressed
  // predicates, sorted), then clickable sprites in spec order, then noop.
  std::set<std::string> keys;
  std::set<std::string> clicked;
  for (const auto& sc : spec.scripts) {
    if (sc.trigger.kind == Trigger::Kind::KeyPressed) keys.insert(sc.trigger.arg);
    if (sc.trigger.kind == Trigger::Kind::SpriteClicked) clicked.insert(sc.trigger.arg);
    detail::for_each_statement(sc.body, [&](const Statement& s) {
      if (s.kind == Statement::Kind::If && s.pred.kind == Predicate::Kind::KeyPressed)
        keys.insert(s.pred.key);
    });
  }
  for (const auto& k : keys) inst.alphabet.push_back(Action::press_key(k, 1));
  for (const auto& sp : spec.sprites)
    if (clicked.count(sp.name)) inst.alphabet.push_back(Action::click_sprite(sp.name));
  inst.alphabet.push_back(Action::noop());

  // Declared size maximum: initial size and every set-size the sprite's
  // own scripts may execute.
  for (const auto& sp : spec.sprites) inst.max_size[sp.name] = sp.size;
  for (const auto& sc : spec.scripts) {
    if (sc.owner == kStageOwner) continue;
    detail::for_each_statement(sc.body, [&](const Statement& s) {
      if (s.kind == Statement::Kind::SetSize)
        inst.max_size[sc.owner] = std::max(inst.max_size[sc.owner], s.amount);
    });
  }

  // Touching listeners present in the spec decide which distance probes
  // exist. Deduplicated and ordered: per sprite, sprite probes before
  // colour probes, each sorted by target name.
  std::map<int, std::set<std::string>> sprite_probes, colour_probes;
  for (const auto& sc : spec.scripts) {
    detail::for_each_statement(sc.body, [&](const Statement& s) {
      if (s.kind != Statement::Kind::If) return;
      if (s.pred.kind == Predicate::Kind::TouchingSprite)
        sprite_probes[inst.sprite_index.at(s.pred.a)].insert(s.pred.b);
      if (s.pred.kind == Predicate::Kind::TouchingColour)
        colour_probes[inst.sprite_index.at(s.pred.a)].insert(s.pred.b);
    });
  }

  // Feature schema: per sprite (spec order) position, heading, costume
  // (only with >1 costumes), size, numeric private variables, distance
  // probes; then numeric globals. Dimension is fixed per instance.
  auto& fs = inst.schema.features;
  for (std::size_t i = 0; i < spec.sprites.size(); ++i) {
    const auto& sp = spec.sprites[i];
    int si = static_cast<int>(i);
    fs.push_back({FeatureDescriptor::Kind::SpriteX, si, "", sp.name + ".x"});
    fs.push_back({FeatureDescriptor::Kind::SpriteY, si, "", sp.name + ".y"});
    fs.push_back({FeatureDescriptor::Kind::Heading, si, "", sp.name + ".heading"});
    if (sp.costumes.size() > 1)
      fs.push_back({FeatureDescriptor::Kind::Costume, si, "", sp.name + ".costume"});
    fs.push_back({FeatureDescriptor::Kind::Size, si, "", sp.name + ".size"});
    for (const auto& [vname, vinit] : sp.variables)
      if (is_number(vinit))
        fs.push_back({FeatureDescriptor::Kind::SpriteVariable, si, vname, sp.name + "." + vname});
    if (auto it = sprite_probes.find(si); it != sprite_probes.end())
      for (const auto& target : it->second)
        fs.push_back({FeatureDescriptor::Kind::DistanceToSprite, si, target,
                      sp.name + ".dist:" + target});
    if (auto it = colour_probes.find(si); it != colour_probes.end())
      for (const auto& target : it->second)
        fs.push_back({FeatureDescriptor::Kind::DistanceToColour, si, target,
                      sp.name + ".dist#" + target});
  }
  for (const auto& [gname, ginit] : spec.globals)
    if (is_number(ginit))
      fs.push_back({FeatureDescriptor::Kind::GlobalVariable, -1, gname, "global." + gname});

  inst.total_statements = total_statement_count(spec);
  inst.spec = std::move(spec);
  return inst;
}

// ---------------------------------------------------------------------------
// Runtime state

enum class Terminal { Running, Won, GameOver, Timeout };

struct SpriteState {
  double x, y, heading, size;
  int costume;
  bool visible;
  std::map<std::string, Value> variables;
};

struct PredicateEval {
  int statement_id;
  long tick;
  bool outcome;
  double dist_true;   // raw branch distance toward evaluating true
  double dist_false;  // raw branch distance toward evaluating false
};

namespace detail {
struct Frame {
  enum class Kind { Seq, Repeat, Forever };
  Kind kind;
  const std::vector<Statement>* body;
  std::size_t pc = 0;
  int remaining = 0;  // Repeat iterations left
};

struct ScriptThread {
  int script = -1;
  std::vector<Frame> frames;
  int wait_left = 0;
  bool done = false;
};
}  // namespace detail

struct GameState {
  std::vector<SpriteState> sprites;
  std::map<std::string, Value> globals;
  int backdrop = 0;
  double mouse_x = 0, mouse_y = 0;
  std::map<std::string, int> held_keys;  // key -> remaining held ticks
  std::string clicked_this_tick;
  long tick = 0;
  Rng rng{0};
  std::set<int> covered;
  Terminal terminal = Terminal::Running;
  bool stopped = false;  // stop-all executed
  std::vector<detail::ScriptThread> threads;
  std::set<std::string> pending_broadcasts;  // delivered at the start of the next tick
  std::vector<PredicateEval> trace;
};

inline GameState initial_state(const GameInstance& inst, std::uint64_t seed) {
  GameState st;
  for (const auto& sp : inst.spec.sprites)
    st.sprites.push_back({sp.x, sp.y, sp.heading, sp.size, sp.costume, sp.visible, sp.variables});
  st.globals = inst.spec.globals;
  st.rng = Rng(mix_seed(0x6e6f76656cULL, seed));
  return st;
}

// ---------------------------------------------------------------------------
// Geometry + predicate evaluation (shared with the objectives module)

struct Rect {
  double x0, y0, x1, y1;
};

inline Rect sprite_rect(const GameState& st, const GameInstance& inst, int sprite) {
  const auto& sp = inst.spec.sprites[sprite];
  const auto& rt = st.sprites[sprite];
  const auto& costume = sp.costumes[rt.costume];
  double w = costume.width * rt.size / 100.0;
  double h = costume.height * rt.size / 100.0;
  return {rt.x - w / 2, rt.y - h / 2, rt.x + w / 2, rt.y + h / 2};
}

// Euclidean gap between two axis-aligned rectangles; 0 when they overlap
// or touch.
inline double rect_gap(const Rect& a, const Rect& b) {
  double dx = std::max({a.x0 - b.x1, b.x0 - a.x1, 0.0});
  double dy = std::max({a.y0 - b.y1, b.y0 - a.y1, 0.0});
  return std::hypot(dx, dy);
}

inline bool rects_touch(const Rect& a, const Rect& b) { return rect_gap(a, b) <= 0.0; }

// Distance from `sprite` to the nearest visible pixel of `colour`;
// kMaxProbeDistance when no such pixel is on screen.
inline double distance_to_colour(const GameState& st, const GameInstance& inst, int sprite,
                                 const std::string& colour) {
  Rect self = sprite_rect(st, inst, sprite);
  double best = kMaxProbeDistance;
  for (std::size_t j = 0; j < st.sprites.size(); ++j) {
    if (static_cast<int>(j) == sprite || !st.sprites[j].visible) continue;
    const auto& sp = inst.spec.sprites[j];
    if (sp.costumes[st.sprites[j].costume].colour != colour) continue;
    best = std::min(best, rect_gap(self, sprite_rect(st, inst, static_cast<int>(j))));
  }
  return best;
}

inline double distance_to_sprite(const GameState& st, const GameInstance& inst, int sprite,
                                 const std::string& target) {
  int j = inst.sprite_index.at(target);
  if (!st.sprites[j].visible || !st.sprites[sprite].visible) return kMaxProbeDistance;
  return rect_gap(sprite_rect(st, inst, sprite), sprite_rect(st, inst, j));
}

namespace detail {

inline Value* find_variable(GameState& st, const GameInstance& inst, int owner_sprite,
                            const std::string& name) {
  if (owner_sprite >= 0) {
    auto& vars = st.sprites[owner_sprite].variables;
    auto it = vars.find(name);
    if (it != vars.end()) return &it->second;
  }
  auto it = st.globals.find(name);
  return it != st.globals.end() ? &it->second : nullptr;
}

inline const Value* find_variable(const GameState& st, const GameInstance& inst, int owner_sprite,
                                  const std::string& name) {
  return find_variable(const_cast<GameState&>(st), inst, owner_sprite, name);
}

inline double eval_number(const Expr& e, const GameState& st, const GameInstance& inst,
                          int owner_sprite) {
  switch (e.kind) {
    case Expr::Kind::Number:
      return e.number;
    case Expr::Kind::String:
      return 0.0;
    case Expr::Kind::Variable: {
      const Value* v = find_variable(st, inst, owner_sprite, e.text);
      return v && is_number(*v) ? as_number(*v) : 0.0;
    }
  }
  return 0.0;
}

}  // namespace detail

inline bool eval_predicate(const Predicate& p, const GameState& st, const GameInstance& inst,
                           int owner_sprite) {
  switch (p.kind) {
    case Predicate::Kind::Compare: {
      double a = detail::eval_number(p.lhs, st, inst, owner_sprite);
      double b = detail::eval_number(p.rhs, st, inst, owner_sprite);
      switch (p.op) {
        case CompareOp::Lt: return a < b;
        case CompareOp::Le: return a <= b;
        case CompareOp::Gt: return a > b;
        case CompareOp::Ge: return a >= b;
        case CompareOp::Eq: return a == b;
      }
      return false;
    }
    case Predicate::Kind::TouchingSprite: {
      int i = inst.sprite_index.at(p.a), j = inst.sprite_index.at(p.b);
      if (!st.sprites[i].visible || !st.sprites[j].visible) return false;
      return rects_touch(sprite_rect(st, inst, i), sprite_rect(st, inst, j));
    }
    case Predicate::Kind::TouchingColour: {
      int i = inst.sprite_index.at(p.a);
      if (!st.sprites[i].visible) return false;
      return distance_to_colour(st, inst, i, p.b) <= 0.0;
    }
    case Predicate::Kind::KeyPressed:
      return st.held_keys.count(p.key) > 0;
    case Predicate::Kind::StringEquals: {
      const Value* v = detail::find_variable(st, inst, owner_sprite, p.variable);
      return v && !is_number(*v) && as_string(*v) == p.literal;
    }
  }
  return false;
}

// Branch distance toward evaluating `pred` to `desired`; 0 iff already
// there. Defined here so the interpreter can trace both directions at
// every predicate evaluation.
inline double branch_distance(const Predicate& p, const GameState& st, const GameInstance& inst,
                              int owner_sprite, bool desired) {
  constexpr double K = 1.0;
  bool actual = eval_predicate(p, st, inst, owner_sprite);
  if (actual == desired) return 0.0;
  switch (p.kind) {
    case Predicate::Kind::Compare: {
      double a = detail::eval_number(p.lhs, st, inst, owner_sprite);
      double b = detail::eval_number(p.rhs, st, inst, owner_sprite);
      CompareOp op = p.op;
      if (!desired) {
        // complement: flip the comparison
        switch (op) {
          case CompareOp::Lt: op = CompareOp::Ge; break;
          case CompareOp::Le: op = CompareOp::Gt; break;
          case CompareOp::Gt: op = CompareOp::Le; break;
          case CompareOp::Ge: op = CompareOp::Lt; break;
          case CompareOp::Eq: return K;  // flat: any change breaks equality
        }
      }
      switch (op) {
        case CompareOp::Lt:
        case CompareOp::Le: return a - b + K;
        case CompareOp::Gt:
        case CompareOp::Ge: return b - a + K;
        case CompareOp::Eq: return std::abs(a - b);
      }
      return K;
    }
    case Predicate::Kind::TouchingSprite: {
      if (!desired) return K;  // overlapping; no gradient defined for separating
      int i = inst.sprite_index.at(p.a);
      return distance_to_sprite(st, inst, i, p.b);
    }
    case Predicate::Kind::TouchingColour: {
      if (!desired) return K;
      int i = inst.sprite_index.at(p.a);
      if (!st.sprites[i].visible) return kMaxProbeDistance;
      return distance_to_colour(st, inst, i, p.b);
    }
    case Predicate::Kind::KeyPressed:
    case Predicate::Kind::StringEquals:
      return K;  // intentionally gradient-free
  }
  return K;
}

// ---------------------------------------------------------------------------
// Interpreter

namespace detail {

inline void clamp_position(SpriteState& sp) {
  sp.x = std::clamp(sp.x, kCanvasXMin, kCanvasXMax);
  sp.y = std::clamp(sp.y, kCanvasYMin, kCanvasYMax);
}

inline double normalize_heading(double deg) {
  double h = std::fmod(deg + 180.0, 360.0);
  if (h < 0) h += 360.0;
  return h - 180.0;
}

// Runs one thread until its next yield point. Returns false when the
// thread finished.
inline void run_thread(ScriptThread& th, GameState& st, const GameInstance& inst) {
  const Script& script = inst.spec.scripts[th.script];
  int owner = script.owner == kStageOwner ? -1 : inst.sprite_index.at(script.owner);

  if (th.wait_left > 0) {
    if (--th.wait_left > 0) return;
  }

  using K = Statement::Kind;
  while (!th.done && st.terminal == Terminal::Running && !st.stopped) {
    Frame& fr = th.frames.back();
    if (fr.pc >= fr.body->size()) {
      // body end: loop back-edge yields, plain frames pop
      if (fr.kind == Frame::Kind::Forever) {
        fr.pc = 0;
        return;
      }
      if (fr.kind == Frame::Kind::Repeat) {
        if (--fr.remaining > 0) {
          fr.pc = 0;
          return;
        }
        th.frames.pop_back();
        if (th.frames.empty()) th.done = true;
        return;  // iteration boundary still yields
      }
      th.frames.pop_back();
      if (th.frames.empty()) th.done = true;
      continue;
    }

    const Statement& s = (*fr.body)[fr.pc++];
    st.covered.insert(s.id);
    switch (s.kind) {
      case K::MoveSteps: {
        auto& sp = st.sprites[owner];
        double rad = sp.heading * M_PI / 180.0;
        sp.x += s.amount * std::sin(rad);
        sp.y += s.amount * std::cos(rad);
        clamp_position(sp);
        break;
      }
      case K::GoTo: {
        auto& sp = st.sprites[owner];
        sp.x = s.x;
        sp.y = s.y;
        clamp_position(sp);
        break;
      }
      case K::PointInDirection:
        st.sprites[owner].heading = normalize_heading(s.amount);
        break;
      case K::ChangeVariable: {
        Value* v = find_variable(st, inst, owner, s.name);
        if (v && is_number(*v))
          *v = as_number(*v) + eval_number(s.expr, st, inst, owner);
        break;
      }
      case K::SetVariable: {
        Value* v = find_variable(st, inst, owner, s.name);
        if (v) {
          if (s.expr.kind == Expr::Kind::String)
            *v = s.expr.text;
          else if (s.expr.kind == Expr::Kind::Variable) {
            const Value* src = find_variable(st, inst, owner, s.expr.text);
            if (src) *v = *src;
          } else
            *v = s.expr.number;
        }
        break;
      }
      case K::SwitchCostume:
        st.sprites[owner].costume = s.index;
        break;
      case K::SwitchBackdrop:
        st.backdrop = s.index;
        break;
      case K::SetSize:
        st.sprites[owner].size = s.amount;
        break;
      case K::Show:
        st.sprites[owner].visible = true;
        break;
      case K::Hide:
        st.sprites[owner].visible = false;
        break;
      case K::Say:
        break;
      case K::Broadcast:
        st.pending_broadcasts.insert(s.name);
        break;
      case K::If: {
        bool outcome = eval_predicate(s.pred, st, inst, owner);
        st.trace.push_back({s.id, st.tick, outcome,
                            branch_distance(s.pred, st, inst, owner, true),
                            branch_distance(s.pred, st, inst, owner, false)});
        const auto& chosen = outcome ? s.body : s.else_body;
        if (!chosen.empty())
          th.frames.push_back({Frame::Kind::Seq, &chosen, 0, 0});
        break;
      }
      case K::Repeat:
        if (s.index > 0 && !s.body.empty())
          th.frames.push_back({Frame::Kind::Repeat, &s.body, 0, s.index});
        break;
      case K::Forever:
        if (!s.body.empty())
          th.frames.push_back({Frame::Kind::Forever, &s.body, 0, 0});
        break;
      case K::Wait:
        th.wait_left = std::max(1, s.index);
        return;
      case K::RandomRangeAssign: {
        Value* v = find_variable(st, inst, owner, s.name);
        if (v) *v = st.rng.uniform(s.lo, s.hi);
        break;
      }
      case K::StopAll:
        st.stopped = true;
        break;
      case K::DeclareWin:
        st.terminal = Terminal::Won;
        break;
      case K::DeclareGameOver:
        st.terminal = Terminal::GameOver;
        break;
    }
  }
}

}  // namespace detail

// Advances the state by one tick. Terminal states are sticky: the input
// state is returned unchanged.
inline void step(GameState& st, const Action& action, const GameInstance& inst) {
  if (st.terminal != Terminal::Running) return;

  switch (action.kind) {
    case Action::Kind::PressKey:
      st.held_keys[action.arg] = std::max(st.held_keys[action.arg], action.duration);
      break;
    case Action::Kind::ClickSprite:
      st.clicked_this_tick = action.arg;
      break;
    case Action::Kind::MoveMouse:
      st.mouse_x = std::clamp(action.x, kCanvasXMin, kCanvasXMax);
      st.mouse_y = std::clamp(action.y, kCanvasYMin, kCanvasYMax);
      break;
    case Action::Kind::Noop:
      break;
  }

  std::set<std::string> broadcasts = std::move(st.pending_broadcasts);
  st.pending_broadcasts.clear();

  // Start eligible scripts, spec order.
  if (!st.stopped) {
    for (std::size_t i = 0; i < inst.spec.scripts.size(); ++i) {
      const Script& sc = inst.spec.scripts[i];
      bool fire = false;
      switch (sc.trigger.kind) {
        case Trigger::Kind::GameStart:
          fire = st.tick == 0;
          break;
        case Trigger::Kind::KeyPressed:
          fire = st.held_keys.count(sc.trigger.arg) > 0;
          break;
        case Trigger::Kind::SpriteClicked:
          fire = st.clicked_this_tick == sc.trigger.arg;
          break;
        case Trigger::Kind::BroadcastReceived:
          fire = broadcasts.count(sc.trigger.arg) > 0;
          break;
      }
      if (!fire) continue;
      bool active = false;
      for (const auto& th : st.threads)
        if (th.script == static_cast<int>(i) && !th.done) active = true;
      if (active) continue;
      detail::ScriptThread th;
      th.script = static_cast<int>(i);
      if (!sc.body.empty())
        th.frames.push_back({detail::Frame::Kind::Seq, &sc.body, 0, 0});
      else
        th.done = true;
      st.covered.insert(sc.entry_id);
      st.threads.push_back(std::move(th));
    }
  }

  // Cooperative round-robin: each thread runs to its next yield.
  for (auto& th : st.threads) {
    if (th.done || st.terminal != Terminal::Running || st.stopped) continue;
    detail::run_thread(th, st, inst);
  }

  std::erase_if(st.threads, [](const detail::ScriptThread& t) { return t.done; });
  if (st.stopped) st.threads.clear();

  st.clicked_this_tick.clear();
  for (auto it = st.held_keys.begin(); it != st.held_keys.end();) {
    if (--it->second <= 0)
      it = st.held_keys.erase(it);
    else
      ++it;
  }
  ++st.tick;
}

// ---------------------------------------------------------------------------
// Behavior features

inline double squash_unbounded(double v) { return 0.5 + v / (2.0 * (1.0 + std::abs(v))); }

inline BehaviorVector extract_features(const GameState& st, const GameInstance& inst) {
  BehaviorVector out;
  out.reserve(inst.schema.dimension());
  for (const auto& f : inst.schema.features) {
    double value = 0.0;
    if (f.sprite >= 0 && !st.sprites[f.sprite].visible) {
      out.push_back(0.0);  // invisible sprites mask to 0
      continue;
    }
    using K = FeatureDescriptor::Kind;
    switch (f.kind) {
      case K::SpriteX:
        value = (st.sprites[f.sprite].x - kCanvasXMin) / (kCanvasXMax - kCanvasXMin);
        break;
      case K::SpriteY:
        value = (st.sprites[f.sprite].y - kCanvasYMin) / (kCanvasYMax - kCanvasYMin);
        break;
      case K::Heading:
        value = (st.sprites[f.sprite].heading + 180.0) / 360.0;
        break;
      case K::Costume: {
        double c = static_cast<double>(inst.spec.sprites[f.sprite].costumes.size());
        value = st.sprites[f.sprite].costume / (c - 1.0);
        break;
      }
      case K::Size:
        value = st.sprites[f.sprite].size / inst.max_size.at(inst.spec.sprites[f.sprite].name);
        break;
      case K::SpriteVariable: {
        const auto& v = st.sprites[f.sprite].variables.at(f.name);
        value = is_number(v) ? squash_unbounded(as_number(v)) : 0.0;
        break;
      }
      case K::DistanceToSprite:
        value = (distance_to_sprite(st, inst, f.sprite, f.name) + kMaxProbeDistance) /
                (2.0 * kMaxProbeDistance);
        break;
      case K::DistanceToColour:
        value = (distance_to_colour(st, inst, f.sprite, f.name) + kMaxProbeDistance) /
                (2.0 * kMaxProbeDistance);
        break;
      case K::GlobalVariable: {
        const auto& v = st.globals.at(f.name);
        value = is_number(v) ? squash_unbounded(as_number(v)) : 0.0;
        break;
      }
    }
    out.push_back(std::clamp(value, 0.0, 1.0));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Episodes

using Policy = std::function<Action(const BehaviorVector&)>;

struct EpisodeResult {
  std::vector<PredicateEval> trace;
  std::set<int> covered;
  GameState final_state;
  Terminal end_reason = Terminal::Timeout;
  long ticks = 0;
};

constexpr int kDefaultDecisionInterval = 10;
constexpr int kDefaultMaxTicks = 300;

/// Pure function of (policy, instance, seed, max_ticks): runs from the
// initial state, querying the policy every `decision_interval` ticks,
// until win, game over, or the tick cap.
inline EpisodeResult run_episode(const Policy& policy, const GameInstance& inst,
                                 std::uint64_t seed, int max_ticks,
                                 int decision_interval = kDefaultDecisionInterval) {
  GameState st = initial_state(inst, seed);
  for (int t = 0; t < max_ticks && st.terminal == Terminal::Running; ++t) {
    Action a = Action::noop();
    if (decision_interval > 0 && t % decision_interval == 0)
      a = policy(extract_features(st, inst));
    step(st, a, inst);
  }
  EpisodeResult res;
  res.trace = st.trace;
  res.covered = st.covered;
  res.end_reason = st.terminal == Terminal::Running ? Terminal::Timeout : st.terminal;
  res.ticks = st.tick;
  res.final_state = std::move(st);
  return res;
}

}  // namespace noveltest
