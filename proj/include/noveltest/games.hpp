#pragma once

#include "noveltest/spec.hpp"

namespace noveltest {

// ---------------------------------------------------------------------------
// Maze world: three levels, arrow-key movement, orange portals. Level 1
// is a straight run to the portal; level 2 adds a grey wall directly
// between spawn and portal, so the Euclidean guidance toward the orange
// colour is deceptive: the player must move away from the portal (over
// the top of the wall) to reach it. Winning means reaching level 3.
//
// Geometry (canvas x in [-240,240], y in [-180,180]):
//   player  20x20 at (-200, 0), random spawn offset 0/10/20 upward
//   portal  40x40 at (210, 0), visible in both levels
//   wall    20x240 at (110, 0), hidden until level 2

inline GameSpec build_maze_world() {
  using namespace stmt;
  GameSpec spec;
  spec.name = "maze-world";
  spec.backdrops = 3;
  spec.globals["level"] = 1.0;
  spec.globals["steps"] = 0.0;

  SpriteSpec player;
  player.name = "player";
  player.x = -200;
  player.y = 0;
  player.heading = 90;
  player.costumes = {{20, 20, "blue"}};
  player.variables["spawn"] = 0.0;
  spec.sprites.push_back(player);

  SpriteSpec portal;
  portal.name = "portal";
  portal.x = 210;
  portal.y = 0;
  portal.costumes = {{40, 40, "orange"}, {40, 40, "orange"}};
  spec.sprites.push_back(portal);

  SpriteSpec wall;
  wall.name = "wall";
  wall.x = 110;
  wall.y = 0;
  wall.costumes = {{20, 240, "grey"}};
  wall.visible = false;
  spec.sprites.push_back(wall);

  // Random spawn: up to two 10px upward offsets drawn per episode.
  {
    Script sc;
    sc.owner = "player";
    sc.trigger = {Trigger::Kind::GameStart, ""};
    sc.body = {
        go_to(-200, 0),
        random_range_assign("spawn", 0, 3),
        if_then(Predicate::compare(Expr::var("spawn"), CompareOp::Ge, Expr::num(1)),
                {point_in_direction(0), move_steps(10),
                 if_then(Predicate::compare(Expr::var("spawn"), CompareOp::Ge, Expr::num(2)),
                         {move_steps(10)})}),
        point_in_direction(90),
    };
    spec.scripts.push_back(std::move(sc));
  }

  // Arrow-key movement; the wall blocks by reverting the step.
  struct Dir {
    const char* key;
    double heading;
  };
  for (Dir d : {Dir{"right", 90}, Dir{"left", -90}, Dir{"up", 0}, Dir{"down", 180}}) {
    Script sc;
    sc.owner = "player";
    sc.trigger = {Trigger::Kind::KeyPressed, d.key};
    sc.body = {
        point_in_direction(d.heading),
        move_steps(10),
        change_variable("steps", Expr::num(1)),
        if_then(Predicate::touching_sprite("player", "wall"), {move_steps(-10)}),
    };
    spec.scripts.push_back(std::move(sc));
  }

  // Heartbeat re-arms the level-1 portal check every tick; it goes quiet
  // once level 2 starts so the level-2 script owns the portal from then on.
  {
    Script sc;
    sc.owner = kStageOwner;
    sc.trigger = {Trigger::Kind::GameStart, ""};
    sc.body = {forever({if_then(Predicate::compare(Expr::var("level"), CompareOp::Le, Expr::num(1)),
                                {broadcast("tick")})})};
    spec.scripts.push_back(std::move(sc));
  }

  // Level-1 advance: touching orange moves the player to level 2.
  {
    Script sc;
    sc.owner = "player";
    sc.trigger = {Trigger::Kind::BroadcastReceived, "tick"};
    sc.body = {if_then(Predicate::touching_colour("player", "orange"),
                       {change_variable("level", Expr::num(1)), go_to(-200, 0),
                        switch_backdrop(1), broadcast("enter2")})};
    spec.scripts.push_back(std::move(sc));
  }

  // Level-2 advance: only armed once level 2 begins, so its guard's
  // branch distance tracks the portal distance during level-2 play.
  {
    Script sc;
    sc.owner = "player";
    sc.trigger = {Trigger::Kind::BroadcastReceived, "enter2"};
    sc.body = {forever({if_then(Predicate::touching_colour("player", "orange"),
                                {change_variable("level", Expr::num(1)), switch_backdrop(2),
                                 declare_win()})})};
    spec.scripts.push_back(std::move(sc));
  }

  // The wall appears in level 2.
  {
    Script sc;
    sc.owner = "wall";
    sc.trigger = {Trigger::Kind::BroadcastReceived, "enter2"};
    sc.body = {show()};
    spec.scripts.push_back(std::move(sc));
  }

  // Portal pulse, purely cosmetic (exercises the costume feature).
  {
    Script sc;
    sc.owner = "portal";
    sc.trigger = {Trigger::Kind::GameStart, ""};
    sc.body = {forever({switch_costume(1), wait(2), switch_costume(0), wait(2)})};
    spec.scripts.push_back(std::move(sc));
  }

  assign_statement_ids(spec);
  return spec;
}

// Notable maze statement ids, resolved from the built spec.
struct MazeIds {
  int level1_advance;  // change level inside the level-1 portal check
  int level2_advance;  // change level inside the level-2 portal check
  int win;             // declare-win
};

inline MazeIds maze_ids(const GameSpec& spec) {
  MazeIds ids{-1, -1, -1};
  for_each_statement(spec, [&](const Statement& s) {
    if (s.kind == Statement::Kind::DeclareWin) ids.win = s.id;
  });
  // scripts: 0 spawn, 1-4 movement, 5 heartbeat, 6 level-1 advance, 7 level-2 advance
  ids.level1_advance = spec.scripts[6].body[0].body[0].id;
  ids.level2_advance = spec.scripts[7].body[0].body[0].body[0].id;
  return ids;
}

// ---------------------------------------------------------------------------
// Clicker: earn points by clicking the ball, navigate four menus with
// next/previous buttons (string-equality guards, deliberately flat
// fitness), and buy upgrades gated by point thresholds nested inside the
// menu branches. The win requires the shop upgrade first, then the lab
// upgrade with five points.

inline GameSpec build_clicker() {
  using namespace stmt;
  GameSpec spec;
  spec.name = "clicker";
  spec.backdrops = 4;
  spec.globals["points"] = 0.0;
  spec.globals["upgrades"] = 0.0;
  spec.globals["stats_views"] = 0.0;
  spec.globals["menu"] = std::string("Main");

  SpriteSpec ball;
  ball.name = "ball";
  ball.x = 0;
  ball.y = 30;
  ball.costumes = {{40, 40, "red"}, {44, 44, "red"}};
  spec.sprites.push_back(ball);

  SpriteSpec next_btn;
  next_btn.name = "next";
  next_btn.x = 120;
  next_btn.y = -150;
  next_btn.costumes = {{30, 20, "green"}};
  spec.sprites.push_back(next_btn);

  SpriteSpec prev_btn;
  prev_btn.name = "prev";
  prev_btn.x = -120;
  prev_btn.y = -150;
  prev_btn.costumes = {{30, 20, "green"}};
  spec.sprites.push_back(prev_btn);

  SpriteSpec buy_btn;
  buy_btn.name = "buy";
  buy_btn.x = 120;
  buy_btn.y = 150;
  buy_btn.costumes = {{30, 20, "yellow"}};
  spec.sprites.push_back(buy_btn);

  auto menu_is = [](const char* m) { return Predicate::string_equals("menu", m); };
  auto set_menu = [](const char* m) { return stmt::set_variable("menu", Expr::str(m)); };

  {
    Script sc;
    sc.owner = kStageOwner;
    sc.trigger = {Trigger::Kind::GameStart, ""};
    sc.body = {say("welcome"), switch_backdrop(0)};
    spec.scripts.push_back(std::move(sc));
  }

  {
    Script sc;
    sc.owner = "ball";
    sc.trigger = {Trigger::Kind::SpriteClicked, "ball"};
    sc.body = {change_variable("points", Expr::num(1)), switch_costume(1), wait(1),
               switch_costume(0)};
    spec.scripts.push_back(std::move(sc));
  }

  // Menu cycle Main -> Shop -> Lab -> Stats -> Main.
  {
    Script sc;
    sc.owner = "next";
    sc.trigger = {Trigger::Kind::SpriteClicked, "next"};
    sc.body = {if_then(
        menu_is("Main"), {set_menu("Shop"), switch_backdrop(1)},
        {if_then(menu_is("Shop"), {set_menu("Lab"), switch_backdrop(2)},
                 {if_then(menu_is("Lab"), {set_menu("Stats"), switch_backdrop(3)},
                          {set_menu("Main"), switch_backdrop(0)})})})};
    spec.scripts.push_back(std::move(sc));
  }
  {
    Script sc;
    sc.owner = "prev";
    sc.trigger = {Trigger::Kind::SpriteClicked, "prev"};
    sc.body = {if_then(
        menu_is("Main"), {set_menu("Stats"), switch_backdrop(3)},
        {if_then(menu_is("Stats"), {set_menu("Lab"), switch_backdrop(2)},
                 {if_then(menu_is("Lab"), {set_menu("Shop"), switch_backdrop(1)},
                          {set_menu("Main"), switch_backdrop(0)})})})};
    spec.scripts.push_back(std::move(sc));
  }

  // Buying: the shop multiplier costs 3 points; the lab upgrade costs 5
  // and requires the multiplier. Buying the lab upgrade wins.
  {
    Script sc;
    sc.owner = "buy";
    sc.trigger = {Trigger::Kind::SpriteClicked, "buy"};
    sc.body = {if_then(
        menu_is("Shop"),
        {if_then(Predicate::compare(Expr::var("points"), CompareOp::Ge, Expr::num(3)),
                 {change_variable("points", Expr::num(-3)),
                  change_variable("upgrades", Expr::num(1)), say("multiplier")})},
        {if_then(menu_is("Lab"),
                 {if_then(Predicate::compare(Expr::var("points"), CompareOp::Ge, Expr::num(5)),
                          {if_then(Predicate::compare(Expr::var("upgrades"), CompareOp::Ge,
                                                      Expr::num(1)),
                                   {change_variable("points", Expr::num(-5)),
                                    change_variable("upgrades", Expr::num(1)),
                                    declare_win()})})})})};
    spec.scripts.push_back(std::move(sc));
  }

  // Continuously evaluated string guard: a coverage target with a
  // perfectly flat fitness landscape.
  {
    Script sc;
    sc.owner = kStageOwner;
    sc.trigger = {Trigger::Kind::GameStart, ""};
    sc.body = {forever(
        {if_then(menu_is("Stats"), {change_variable("stats_views", Expr::num(1))})})};
    spec.scripts.push_back(std::move(sc));
  }

  assign_statement_ids(spec);
  return spec;
}

struct ClickerIds {
  int stats_counter;  // string-guarded statement behind the Stats menu
  int win;            // declare-win behind the deep upgrade
};

inline ClickerIds clicker_ids(const GameSpec& spec) {
  ClickerIds ids{-1, -1};
  for_each_statement(spec, [&](const Statement& s) {
    if (s.kind == Statement::Kind::DeclareWin) ids.win = s.id;
  });
  // last script: stage forever { if menu = Stats { change stats_views } }
  ids.stats_counter = spec.scripts.back().body[0].body[0].body[0].id;
  return ids;
}

}  // namespace noveltest
