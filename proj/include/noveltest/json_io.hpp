#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "noveltest/neat.hpp"
#include "noveltest/spec.hpp"

namespace noveltest {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Game spec <-> JSON

namespace detail {

inline json expr_to_json(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number: return json(e.number);
    case Expr::Kind::String: return json(e.text);
    case Expr::Kind::Variable: return json{{"var", e.text}};
  }
  return json();
}

inline Expr expr_from_json(const json& j) {
  if (j.is_number()) return Expr::num(j.get<double>());
  if (j.is_string()) return Expr::str(j.get<std::string>());
  if (j.is_object() && j.contains("var")) return Expr::var(j.at("var").get<std::string>());
  throw std::runtime_error("invalid expression: " + j.dump());
}

inline std::string op_to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "=";
  }
  return "?";
}

inline CompareOp op_from_string(const std::string& s) {
  if (s == "<") return CompareOp::Lt;
  if (s == "<=") return CompareOp::Le;
  if (s == ">") return CompareOp::Gt;
  if (s == ">=") return CompareOp::Ge;
  if (s == "=") return CompareOp::Eq;
  throw std::runtime_error("invalid compare op '" + s + "'");
}

inline json predicate_to_json(const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::Compare:
      return {{"kind", "compare"},
              {"op", op_to_string(p.op)},
              {"lhs", expr_to_json(p.lhs)},
              {"rhs", expr_to_json(p.rhs)}};
    case Predicate::Kind::TouchingSprite:
      return {{"kind", "touching-sprite"}, {"a", p.a}, {"b", p.b}};
    case Predicate::Kind::TouchingColour:
      return {{"kind", "touching-colour"}, {"sprite", p.a}, {"colour", p.b}};
    case Predicate::Kind::KeyPressed:
      return {{"kind", "key-pressed"}, {"key", p.key}};
    case Predicate::Kind::StringEquals:
      return {{"kind", "string-equals"}, {"variable", p.variable}, {"literal", p.literal}};
  }
  return json();
}

inline Predicate predicate_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "compare")
    return Predicate::compare(expr_from_json(j.at("lhs")),
                              op_from_string(j.at("op").get<std::string>()),
                              expr_from_json(j.at("rhs")));
  if (kind == "touching-sprite")
    return Predicate::touching_sprite(j.at("a").get<std::string>(), j.at("b").get<std::string>());
  if (kind == "touching-colour")
    return Predicate::touching_colour(j.at("sprite").get<std::string>(),
                                      j.at("colour").get<std::string>());
  if (kind == "key-pressed") return Predicate::key_pressed(j.at("key").get<std::string>());
  if (kind == "string-equals")
    return Predicate::string_equals(j.at("variable").get<std::string>(),
                                    j.at("literal").get<std::string>());
  throw std::runtime_error("invalid predicate kind '" + kind + "'");
}

inline json statements_to_json(const std::vector<Statement>& body);

inline json statement_to_json(const Statement& s) {
  using K = Statement::Kind;
  json j;
  j["id"] = s.id;
  switch (s.kind) {
    case K::MoveSteps: j["kind"] = "move-steps"; j["steps"] = s.amount; break;
    case K::GoTo: j["kind"] = "go-to"; j["x"] = s.x; j["y"] = s.y; break;
    case K::PointInDirection: j["kind"] = "point-in-direction"; j["degrees"] = s.amount; break;
    case K::ChangeVariable:
      j["kind"] = "change-variable";
      j["variable"] = s.name;
      j["delta"] = expr_to_json(s.expr);
      break;
    case K::SetVariable:
      j["kind"] = "set-variable";
      j["variable"] = s.name;
      j["value"] = expr_to_json(s.expr);
      break;
    case K::SwitchCostume: j["kind"] = "switch-costume"; j["index"] = s.index; break;
    case K::SwitchBackdrop: j["kind"] = "switch-backdrop"; j["index"] = s.index; break;
    case K::SetSize: j["kind"] = "set-size"; j["percent"] = s.amount; break;
    case K::Show: j["kind"] = "show"; break;
    case K::Hide: j["kind"] = "hide"; break;
    case K::Say: j["kind"] = "say"; j["text"] = s.name; break;
    case K::Broadcast: j["kind"] = "broadcast"; j["tag"] = s.name; break;
    case K::If:
      j["kind"] = "if";
      j["predicate"] = predicate_to_json(s.pred);
      j["then"] = statements_to_json(s.body);
      if (!s.else_body.empty()) j["else"] = statements_to_json(s.else_body);
      break;
    case K::Repeat:
      j["kind"] = "repeat";
      j["times"] = s.index;
      j["body"] = statements_to_json(s.body);
      break;
    case K::Forever:
      j["kind"] = "forever";
      j["body"] = statements_to_json(s.body);
      break;
    case K::Wait: j["kind"] = "wait"; j["ticks"] = s.index; break;
    case K::RandomRangeAssign:
      j["kind"] = "random-range-assign";
      j["variable"] = s.name;
      j["lo"] = s.lo;
      j["hi"] = s.hi;
      break;
    case K::StopAll: j["kind"] = "stop-all"; break;
    case K::DeclareWin: j["kind"] = "declare-win"; break;
    case K::DeclareGameOver: j["kind"] = "declare-game-over"; break;
  }
  return j;
}

inline json statements_to_json(const std::vector<Statement>& body) {
  json arr = json::array();
  for (const auto& s : body) arr.push_back(statement_to_json(s));
  return arr;
}

inline std::vector<Statement> statements_from_json(const json& arr);

inline Statement statement_from_json(const json& j) {
  using K = Statement::Kind;
  Statement s;
  if (j.contains("id")) s.id = j.at("id").get<int>();
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "move-steps") { s.kind = K::MoveSteps; s.amount = j.at("steps").get<double>(); }
  else if (kind == "go-to") { s.kind = K::GoTo; s.x = j.at("x").get<double>(); s.y = j.at("y").get<double>(); }
  else if (kind == "point-in-direction") { s.kind = K::PointInDirection; s.amount = j.at("degrees").get<double>(); }
  else if (kind == "change-variable") { s.kind = K::ChangeVariable; s.name = j.at("variable").get<std::string>(); s.expr = expr_from_json(j.at("delta")); }
  else if (kind == "set-variable") { s.kind = K::SetVariable; s.name = j.at("variable").get<std::string>(); s.expr = expr_from_json(j.at("value")); }
  else if (kind == "switch-costume") { s.kind = K::SwitchCostume; s.index = j.at("index").get<int>(); }
  else if (kind == "switch-backdrop") { s.kind = K::SwitchBackdrop; s.index = j.at("index").get<int>(); }
  else if (kind == "set-size") { s.kind = K::SetSize; s.amount = j.at("percent").get<double>(); }
  else if (kind == "show") { s.kind = K::Show; }
  else if (kind == "hide") { s.kind = K::Hide; }
  else if (kind == "say") { s.kind = K::Say; s.name = j.at("text").get<std::string>(); }
  else if (kind == "broadcast") { s.kind = K::Broadcast; s.name = j.at("tag").get<std::string>(); }
  else if (kind == "if") {
    s.kind = K::If;
    s.pred = predicate_from_json(j.at("predicate"));
    s.body = statements_from_json(j.at("then"));
    if (j.contains("else")) s.else_body = statements_from_json(j.at("else"));
  } else if (kind == "repeat") {
    s.kind = K::Repeat;
    s.index = j.at("times").get<int>();
    s.body = statements_from_json(j.at("body"));
  } else if (kind == "forever") {
    s.kind = K::Forever;
    s.body = statements_from_json(j.at("body"));
  } else if (kind == "wait") { s.kind = K::Wait; s.index = j.at("ticks").get<int>(); }
  else if (kind == "random-range-assign") {
    s.kind = K::RandomRangeAssign;
    s.name = j.at("variable").get<std::string>();
    s.lo = j.at("lo").get<double>();
    s.hi = j.at("hi").get<double>();
  } else if (kind == "stop-all") { s.kind = K::StopAll; }
  else if (kind == "declare-win") { s.kind = K::DeclareWin; }
  else if (kind == "declare-game-over") { s.kind = K::DeclareGameOver; }
  else throw std::runtime_error("invalid statement kind '" + kind + "'");
  return s;
}

inline std::vector<Statement> statements_from_json(const json& arr) {
  std::vector<Statement> out;
  for (const auto& j : arr) out.push_back(statement_from_json(j));
  return out;
}

inline json value_to_json(const Value& v) {
  return is_number(v) ? json(as_number(v)) : json(as_string(v));
}

inline Value value_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  return j.get<std::string>();
}

inline json variables_to_json(const std::map<std::string, Value>& vars) {
  json j = json::object();
  for (const auto& [k, v] : vars) j[k] = value_to_json(v);
  return j;
}

inline std::map<std::string, Value> variables_from_json(const json& j) {
  std::map<std::string, Value> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = value_from_json(it.value());
  return out;
}

}  // namespace detail

inline json spec_to_json(const GameSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["stage"] = {{"backdrops", spec.backdrops}, {"variables", detail::variables_to_json(spec.globals)}};
  json sprites = json::array();
  for (const auto& sp : spec.sprites) {
    json costumes = json::array();
    for (const auto& c : sp.costumes)
      costumes.push_back({{"width", c.width}, {"height", c.height}, {"colour", c.colour}});
    sprites.push_back({{"name", sp.name},
                       {"x", sp.x},
                       {"y", sp.y},
                       {"heading", sp.heading},
                       {"costumes", costumes},
                       {"costume", sp.costume},
                       {"size", sp.size},
                       {"visible", sp.visible},
                       {"variables", detail::variables_to_json(sp.variables)}});
  }
  j["sprites"] = sprites;
  json scripts = json::array();
  for (const auto& sc : spec.scripts) {
    json trig;
    switch (sc.trigger.kind) {
      case Trigger::Kind::GameStart: trig = {{"kind", "game-start"}}; break;
      case Trigger::Kind::KeyPressed: trig = {{"kind", "key-pressed"}, {"key", sc.trigger.arg}}; break;
      case Trigger::Kind::SpriteClicked: trig = {{"kind", "sprite-clicked"}, {"sprite", sc.trigger.arg}}; break;
      case Trigger::Kind::BroadcastReceived: trig = {{"kind", "broadcast"}, {"tag", sc.trigger.arg}}; break;
    }
    scripts.push_back({{"owner", sc.owner},
                       {"trigger", trig},
                       {"id", sc.entry_id},
                       {"body", detail::statements_to_json(sc.body)}});
  }
  j["scripts"] = scripts;
  return j;
}

inline GameSpec spec_from_json(const json& j) {
  GameSpec spec;
  spec.name = j.value("name", "");
  if (j.contains("stage")) {
    spec.backdrops = j.at("stage").value("backdrops", 1);
    if (j.at("stage").contains("variables"))
      spec.globals = detail::variables_from_json(j.at("stage").at("variables"));
  }
  for (const auto& js : j.value("sprites", json::array())) {
    SpriteSpec sp;
    sp.name = js.at("name").get<std::string>();
    sp.x = js.value("x", 0.0);
    sp.y = js.value("y", 0.0);
    sp.heading = js.value("heading", 90.0);
    for (const auto& jc : js.at("costumes"))
      sp.costumes.push_back({jc.at("width").get<double>(), jc.at("height").get<double>(),
                             jc.at("colour").get<std::string>()});
    sp.costume = js.value("costume", 0);
    sp.size = js.value("size", 100.0);
    sp.visible = js.value("visible", true);
    if (js.contains("variables")) sp.variables = detail::variables_from_json(js.at("variables"));
    spec.sprites.push_back(std::move(sp));
  }
  for (const auto& jc : j.value("scripts", json::array())) {
    Script sc;
    sc.owner = jc.at("owner").get<std::string>();
    const json& trig = jc.at("trigger");
    std::string tk = trig.at("kind").get<std::string>();
    if (tk == "game-start") sc.trigger.kind = Trigger::Kind::GameStart;
    else if (tk == "key-pressed") { sc.trigger.kind = Trigger::Kind::KeyPressed; sc.trigger.arg = trig.at("key").get<std::string>(); }
    else if (tk == "sprite-clicked") { sc.trigger.kind = Trigger::Kind::SpriteClicked; sc.trigger.arg = trig.at("sprite").get<std::string>(); }
    else if (tk == "broadcast") { sc.trigger.kind = Trigger::Kind::BroadcastReceived; sc.trigger.arg = trig.at("tag").get<std::string>(); }
    else throw std::runtime_error("invalid trigger kind '" + tk + "'");
    if (jc.contains("id")) sc.entry_id = jc.at("id").get<int>();
    sc.body = detail::statements_from_json(jc.at("body"));
    spec.scripts.push_back(std::move(sc));
  }
  assign_statement_ids(spec);
  return spec;
}

// FNV-1a over the canonical serialization; identifies the spec a suite
// was evolved on.
inline std::string spec_digest(const GameSpec& spec) {
  std::string canonical = spec_to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Genome <-> JSON

inline json genome_to_json(const Genome& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    const char* role = n.role == NodeRole::Input    ? "input"
                       : n.role == NodeRole::Bias   ? "bias"
                       : n.role == NodeRole::Hidden ? "hidden"
                                                    : "output";
    nodes.push_back({{"id", n.id},
                     {"role", role},
                     {"activation", n.activation == ActivationFn::Tanh ? "tanh" : "sigmoid"}});
  }
  json conns = json::array();
  for (const auto& c : g.connections)
    conns.push_back({{"innovation", c.innovation},
                     {"source", c.source},
                     {"target", c.target},
                     {"weight", c.weight},
                     {"enabled", c.enabled}});
  return {{"id", g.id}, {"nodes", nodes}, {"connections", conns}};
}

inline Genome genome_from_json(const json& j) {
  Genome g;
  g.id = j.at("id").get<int>();
  for (const auto& jn : j.at("nodes")) {
    NodeGene n;
    n.id = jn.at("id").get<int>();
    std::string role = jn.at("role").get<std::string>();
    n.role = role == "input"    ? NodeRole::Input
             : role == "bias"   ? NodeRole::Bias
             : role == "hidden" ? NodeRole::Hidden
                                : NodeRole::Output;
    n.activation =
        jn.value("activation", "tanh") == "sigmoid" ? ActivationFn::Sigmoid : ActivationFn::Tanh;
    g.nodes.push_back(n);
  }
  for (const auto& jc : j.at("connections"))
    g.connections.push_back({jc.at("innovation").get<int>(), jc.at("source").get<int>(),
                             jc.at("target").get<int>(), jc.at("weight").get<double>(),
                             jc.at("enabled").get<bool>()});
  return g;
}

// ---------------------------------------------------------------------------
// File helpers

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  in >> j;
  return j;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace noveltest
