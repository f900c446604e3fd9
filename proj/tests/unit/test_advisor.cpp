#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "saac/advisor_http.hpp"

using namespace saac;

namespace {

nlohmann::json session_body(const Instance& inst, int advised, int iterations) {
  auto j = instance_to_json(inst);
  j["advised"] = advised;
  j["search"] = {{"iterations", iterations}};
  j["seed"] = 5;
  return j;
}

nlohmann::json wait_done(const std::function<nlohmann::json()>& poll) {
  for (int k = 0; k < 6000; ++k) {
    auto j = poll();
    if (j.at("status") != "running") return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ADD_FAILURE() << "job did not finish";
  return {};
}

nlohmann::json wait_prediction(AdvisorService& svc, const std::string& id) {
  for (int k = 0; k < 12000; ++k) {
    auto j = svc.prediction(id);
    if (j.at("ready")) return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ADD_FAILURE() << "prediction did not finish";
  return {};
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const AdvisorError& e) {
    return e.code();
  }
  return "none";
}

AdvisorSession example_session(int advised = 0) {
  return AdvisorSession("t", example1_instance(), advised, SearchParams{}, 3);
}

PricePrediction fixed_point(const Instance& inst) {
  PredictorParams p;
  p.mc_samples = 300;
  p.max_iters = 60;
  p.tolerance = inst.config.epsilon / 10;
  p.rng_seed = 2;
  return iterate_prediction(inst, p).p_star;
}

}  // namespace

TEST(Session, FirstRecommendationForExampleOne) {
  SearchParams sp;
  sp.max_iterations = 3000;
  AdvisorSession s("t", example1_instance(), 0, sp, 3);
  const auto r = s.recommend(PricePrediction{10, 10});
  EXPECT_EQ(r.action, ItemSet{1});
  EXPECT_FALSE(r.root_table.empty());
}

TEST(Session, RecordRoundWithObservedWinner) {
  auto s = example_session();
  const auto& st = s.record_round(0, {ItemSet{1}, ItemSet{3}}, {{0, 1}});
  EXPECT_EQ(st.prices, (std::vector<Ticks>{1, 1}));
  EXPECT_EQ(st.winner, (std::vector<int>{1, 1}));
  EXPECT_EQ(st.round, 1);
  EXPECT_EQ(s.replay().prices, st.prices);
  EXPECT_EQ(s.replay().winner, st.winner);
}

TEST(Session, AllPassTerminates) {
  auto s = example_session();
  s.record_round(0, {ItemSet{0}, ItemSet{0}}, {});
  EXPECT_TRUE(s.state().terminal);
  const auto view = s.state_view();
  EXPECT_EQ(view.at("final_utilities"), (std::vector<Money>{0, 0}));
  EXPECT_EQ(code_of([&] { s.record_round(1, {ItemSet{0}, ItemSet{0}}, {}); }), "TERMINAL");
  EXPECT_EQ(code_of([&] { s.recommend(PricePrediction{10, 10}); }), "TERMINAL");
}

TEST(Session, RejectsBadRounds) {
  auto s = example_session();
  EXPECT_EQ(code_of([&] { s.record_round(1, {ItemSet{1}, ItemSet{2}}, {}); }), "OUT_OF_ORDER");
  // tie without an observed winner
  EXPECT_EQ(code_of([&] { s.record_round(0, {ItemSet{1}, ItemSet{1}}, {}); }), "INVALID_WINNER");
  // winner on an item nobody bid
  EXPECT_EQ(code_of([&] { s.record_round(0, {ItemSet{1}, ItemSet{0}}, {{1, 0}}); }), "INVALID_WINNER");
  EXPECT_EQ(code_of([&] { s.record_round(0, {ItemSet{1}, ItemSet{2}}, {{0, 1}}); }), "INVALID_WINNER");
  EXPECT_EQ(s.state().round, 0);
  EXPECT_TRUE(s.history().empty());
  s.record_round(0, {ItemSet{1}, ItemSet{2}}, {});
  EXPECT_EQ(code_of([&] { s.record_round(0, {ItemSet{2}, ItemSet{0}}, {}); }), "OUT_OF_ORDER");
  EXPECT_EQ(s.state().round, 1);
  // bidder 0 holds item 0 and may not raise it
  EXPECT_EQ(code_of([&] { s.record_round(1, {ItemSet{1}, ItemSet{0}}, {}); }), "ALREADY_WINNING");
}

TEST(Session, BudgetAndEligibilityCodes) {
  AdvisorSession s("t", example1_instance(1.5, 100), 0, SearchParams{}, 3);
  EXPECT_EQ(code_of([&] { s.record_round(0, {ItemSet{3}, ItemSet{0}}, {}); }), "BUDGET");
  s.record_round(0, {ItemSet{0}, ItemSet{1}}, {});
  // bidder 0 passed: eligibility drops to what it held, zero
  EXPECT_EQ(s.state().eligibility[0], 0);
  EXPECT_EQ(code_of([&] { s.record_round(1, {ItemSet{2}, ItemSet{0}}, {}); }), "ELIGIBILITY");
}

TEST(Session, ReplayIntegrityOnRandomHistories) {
  Rng rng = make_rng(9);
  for (int k = 0; k < 50; ++k) {
    const auto inst = generate_instance(3, 3, 1.0, {}, 500 + k);
    AdvisorSession s("t", inst, 0, SearchParams{}, 1);
    for (int r = 0; r < 12 && !s.state().terminal; ++r) {
      std::vector<ItemSet> bids;
      for (int i = 0; i < 3; ++i) {
        const auto legal = legal_bids(s.state(), i, inst.profiles[i]);
        bids.push_back(legal[uniform_index(rng, static_cast<int>(legal.size()))]);
      }
      std::map<int, int> winners;
      for (int j = 0; j < 3; ++j) {
        std::vector<int> cand;
        for (int i = 0; i < 3; ++i)
          if (contains(bids[i], j)) cand.push_back(i);
        if (cand.size() > 1) winners[j] = cand[uniform_index(rng, static_cast<int>(cand.size()))];
      }
      s.record_round(r, bids, winners);
      const auto again = s.replay();
      ASSERT_EQ(again.prices, s.state().prices);
      ASSERT_EQ(again.winner, s.state().winner);
      ASSERT_EQ(again.eligibility, s.state().eligibility);
      ASSERT_EQ(again.terminal, s.state().terminal);
    }
  }
}

TEST(Session, ExposureScenarioDropsOut) {
  const auto inst = example1_instance(12.0, 16.0);
  SearchParams sp;
  sp.max_iterations = 5000;
  AdvisorSession s("t", inst, 1, sp, 3);
  const auto p_star = fixed_point(inst);
  EXPECT_EQ(s.recommend(p_star).action, ItemSet{0});
}

TEST(Session, DemandReductionScenario) {
  Instance inst;
  inst.config = AuctionConfig{2, 2, 0.1, 0};
  inst.profiles = {{20.0, ValueFunction::additive({10, 10})}, {7.0, ValueFunction::additive({10, 10})}};
  SearchParams sp;
  sp.max_iterations = 20000;
  AdvisorSession s("t", inst, 0, sp, 3);
  const auto r = s.recommend(fixed_point(inst));
  EXPECT_NE(r.action, ItemSet{3});
  EXPECT_EQ(item_count(r.action), 1);
}

TEST(WhatIf, MatchesRootTableForRecommendedAction) {
  const auto inst = example1_instance();
  SearchParams sp;
  sp.max_iterations = 4000;
  sp.alpha = 0;
  AdvisorSession s("t", inst, 0, sp, 3);
  const PricePrediction p_star{10, 10};
  const auto r = s.recommend(p_star);
  const auto row = std::find_if(r.root_table.begin(), r.root_table.end(),
                                [&](const RootActionRow& x) { return x.action == r.action; });
  ASSERT_NE(row, r.root_table.end());
  const auto w = s.what_if(p_star, r.action, 0, 4000);
  EXPECT_NEAR(w.mean_utility, row->mean, 1.0);
}

TEST(WhatIf, PassWhenEveryoneElseIsOutIsDeterministic) {
  const auto inst = example1_instance();
  auto s = example_session(0);
  s.record_round(0, {ItemSet{1}, ItemSet{0}}, {});
  // bidder 1 passed with nothing held: eligibility 0, so passing closes the auction
  const auto w = s.what_if(PricePrediction{10, 10}, ItemSet{0}, 0, 200);
  EXPECT_EQ(w.terminal_fraction, 1.0);
  EXPECT_EQ(w.min_utility, w.max_utility);
  EXPECT_DOUBLE_EQ(w.mean_utility, inst.profiles[0].values(ItemSet{1}) - 1.0);
}

TEST(WhatIf, RejectsIllegalAndLeavesSessionAlone) {
  AdvisorSession s("t", example1_instance(1.5, 100), 0, SearchParams{}, 3);
  EXPECT_EQ(code_of([&] { s.what_if(PricePrediction{10, 10}, ItemSet{3}, 0, 10); }), "BUDGET");
  SearchParams sp;
  sp.max_iterations = 500;
  AdvisorSession a("t", example1_instance(), 0, sp, 3);
  const auto before = a.recommend(PricePrediction{10, 10});
  for (ItemSet x : {ItemSet{0}, ItemSet{1}, ItemSet{3}}) a.what_if(PricePrediction{10, 10}, x, 2, 50);
  const auto after = a.recommend(PricePrediction{10, 10});
  EXPECT_EQ(before.action, after.action);
  ASSERT_EQ(before.root_table.size(), after.root_table.size());
  for (std::size_t k = 0; k < before.root_table.size(); ++k) {
    EXPECT_EQ(before.root_table[k].n, after.root_table[k].n);
    EXPECT_EQ(before.root_table[k].mean, after.root_table[k].mean);
  }
}

TEST(Service, CreateValidation) {
  AdvisorService svc;
  Instance one;
  one.config = AuctionConfig{1, 2, 1.0, 0};
  one.profiles = {{10.0, ValueFunction::additive({1, 1})}};
  EXPECT_EQ(code_of([&] { svc.create_session(session_body(one, 0, 10)); }), "INVALID_REQUEST");
  auto bad = session_body(example1_instance(), 0, 10);
  bad["bidders"][0]["values"]["table"] = {0, 5, 5, 4};
  try {
    svc.create_session(bad);
    FAIL() << "free disposal violation accepted";
  } catch (const AdvisorError& e) {
    EXPECT_EQ(e.code(), "INVALID_REQUEST");
    EXPECT_NE(std::string(e.what()).find("v({0}) > v({0,1})"), std::string::npos) << e.what();
  }
  auto b = session_body(example1_instance(), 0, 10);
  b["p_star"] = {10, 10};
  const auto a1 = svc.create_session(b), a2 = svc.create_session(b);
  EXPECT_NE(a1, a2);
  svc.record_round(a1, {{"round", 0}, {"bids", {{0}, nlohmann::json::array()}}});
  EXPECT_EQ(svc.state(a1).at("round"), 1);
  EXPECT_EQ(svc.state(a2).at("round"), 0);
  EXPECT_EQ(code_of([&] { svc.state("nope"); }), "NOT_FOUND");
  EXPECT_EQ(code_of([&] { svc.record_round(a1, {{"round", 1}, {"bids", {{7}, {0}}}}); }), "UNKNOWN_ITEM");
}

TEST(Service, RecommendWaitsForPrediction) {
  AdvisorOptions opt;
  opt.workers = 1;
  opt.predictor.mc_samples = 200;
  opt.predictor.max_iters = 40;
  AdvisorService svc(opt);
  // occupy the single worker so p* is still queued
  const auto id = svc.create_session(session_body(example1_instance(), 0, 300));
  const auto id2 = svc.create_session(session_body(example1_instance(7, 9), 0, 300));
  bool saw_not_ready = false;
  try {
    svc.start_recommend(id2);
  } catch (const AdvisorError& e) {
    saw_not_ready = e.code() == "NOT_READY";
    EXPECT_TRUE(e.detail().contains("progress"));
  }
  EXPECT_TRUE(saw_not_ready);
  const auto pred = wait_prediction(svc, id);
  EXPECT_EQ(pred.at("p_star").size(), 2u);
  svc.start_recommend(id);
  const auto rec = wait_done([&] { return svc.get_recommend(id); });
  EXPECT_EQ(rec.at("status"), "done");
  const auto action = rec.at("result").at("action");
  const auto s = svc.session(id);
  EXPECT_FALSE(check_bid(s.state(), 0, s.instance().profiles[0], items_from_json(action, 2)).has_value());
}

TEST(Service, ProfileEditInvalidatesPrediction) {
  AdvisorOptions opt;
  opt.predictor.mc_samples = 100;
  opt.predictor.max_iters = 20;
  AdvisorService svc(opt);
  const auto id = svc.create_session(session_body(example1_instance(), 0, 200));
  const auto first = wait_prediction(svc, id).at("p_star");
  svc.start_recommend(id);
  wait_done([&] { return svc.get_recommend(id); });
  auto bidders = instance_to_json(example1_instance(3, 3)).at("bidders");
  svc.edit_profiles(id, {{"bidders", bidders}});
  EXPECT_EQ(svc.get_recommend(id).at("stale"), true);
  const auto second = wait_prediction(svc, id).at("p_star");
  EXPECT_NE(first, second);
  auto broken = bidders;
  broken[1]["values"]["table"] = {0, 9, 9, 1};
  EXPECT_EQ(code_of([&] { svc.edit_profiles(id, {{"bidders", broken}}); }), "INVALID_REQUEST");
}

TEST(Service, WhatIfJobs) {
  AdvisorService svc;
  auto b = session_body(example1_instance(), 0, 100);
  b["p_star"] = {10, 10};
  const auto id = svc.create_session(b);
  const auto started = svc.start_what_if(id, {{"action", {0}}, {"samples", 100}});
  const std::string job = started.at("job");
  const auto done = wait_done([&] { return svc.get_what_if(id, job); });
  EXPECT_EQ(done.at("status"), "done");
  EXPECT_EQ(done.at("result").at("samples"), 100);
  EXPECT_EQ(code_of([&] { svc.get_what_if(id, "w99"); }), "NOT_FOUND");
  EXPECT_EQ(code_of([&] { svc.start_what_if(id, {{"action", {0}}, {"samples", 0}}); }), "INVALID_REQUEST");
  EXPECT_EQ(svc.state(id).at("round"), 0);
}

TEST(Http, EndToEnd) {
  AdvisorService svc;
  httplib::Server server;
  install_advisor_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client cli("127.0.0.1", port);

  auto res = cli.Get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);

  auto body = session_body(example1_instance(), 0, 200);
  body["p_star"] = {10, 10};
  res = cli.Post("/sessions", body.dump(), "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201);
  const std::string id = nlohmann::json::parse(res->body).at("id");

  res = cli.Post("/sessions/" + id + "/rounds",
                 nlohmann::json{{"round", 0}, {"bids", {{0}, {0, 1}}}, {"winners", {{"0", 1}}}}.dump(),
                 "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto st = nlohmann::json::parse(res->body);
  EXPECT_EQ(st.at("winners"), (nlohmann::json{1, 1}));
  EXPECT_EQ(st.at("price_ticks"), (nlohmann::json{1, 1}));

  res = cli.Post("/sessions/" + id + "/rounds", nlohmann::json{{"round", 0}, {"bids", {{0}, nlohmann::json::array()}}}.dump(),
                 "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(nlohmann::json::parse(res->body).at("code"), "OUT_OF_ORDER");

  res = cli.Post("/sessions/" + id + "/rounds", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = cli.Get("/sessions/missing");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  res = cli.Post("/sessions/" + id + "/recommendation", "", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  const auto rec = wait_done([&] {
    auto r = cli.Get("/sessions/" + id + "/recommendation");
    return nlohmann::json::parse(r->body);
  });
  EXPECT_EQ(rec.at("status"), "done");

  res = cli.Post("/sessions/" + id + "/whatif", nlohmann::json{{"action", {0}}, {"samples", 20}}.dump(),
                 "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 202);
  const std::string job = nlohmann::json::parse(res->body).at("job");
  const auto wi = wait_done([&] {
    auto r = cli.Get("/sessions/" + id + "/whatif/" + job);
    return nlohmann::json::parse(r->body);
  });
  EXPECT_EQ(wi.at("status"), "done");

  res = cli.Get("/sessions/" + id + "/trace");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto trace = parse_trace(res->body);
  EXPECT_EQ(trace.rounds.size(), 1u);

  res = cli.Put("/sessions/" + id + "/profiles",
                nlohmann::json{{"bidders", instance_to_json(example1_instance(50, 50)).at("bidders")}}.dump(),
                "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);

  server.stop();
  t.join();
}
