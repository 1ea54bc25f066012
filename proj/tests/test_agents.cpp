#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "vrl/agents.hpp"
#include "vrl/error.hpp"

using namespace vrl;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << contents;
  return path;
}

}  // namespace

TEST_SUITE("agents") {
  TEST_CASE("a zero-offset synthetic agent returns 0.5 at the decision boundary") {
    const SyntheticWorld world(404, 4);
    SyntheticAgent agent(AgentKind::semantic, world.direction(), 0.2, 0.0);

    // Project the direction out of an arbitrary vector: score becomes 0.
    LabeledInstance inst;
    inst.id = "boundary";
    inst.features = {1.0, 2.0, -0.5, 0.25};
    const double s = world.score(inst.features);
    for (std::size_t i = 0; i < inst.features.size(); ++i) {
      inst.features[i] -= s * world.direction()[i];
    }
    CHECK(world.score(inst.features) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(agent.query(inst) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("queries are deterministic") {
    const SyntheticWorld world(11, 6);
    const AgentSet agents = world.make_agents();
    const auto dataset = world.make_dataset(4);
    for (const LabeledInstance& inst : dataset) {
      const AgentOpinions a = agents.opinions(inst);
      const AgentOpinions b = agents.opinions(inst);
      CHECK(a == b);
      CHECK(a == inst.agent_gt);  // generation stored exactly these values
    }
  }

  TEST_CASE("the three default perspectives disagree off the boundary") {
    const SyntheticWorld world(12, 6);
    const auto dataset = world.make_dataset(20);
    const AgentSet agents = world.make_agents();
    for (const LabeledInstance& inst : dataset) {
      const AgentOpinions o = agents.opinions(inst);
      CHECK(o.semantic != o.frequency);
      CHECK(o.frequency != o.dual);
      CHECK(o.semantic != o.dual);
    }
  }

  TEST_CASE("ingestion builds a validated store") {
    const auto path = temp_file("vrl_agents_ok.jsonl",
                                "{\"instance_id\":\"a\",\"prob\":0.87}\n"
                                "{\"instance_id\":\"b\",\"prob\":0.0}\n"
                                "{\"instance_id\":\"c\",\"prob\":1.0}\n");
    const AgentStore store = ingest_agent_file(path.string(), AgentKind::frequency);
    CHECK(store.size() == 3);
    CHECK(store.at("a") == 0.87);  // stored values come back exactly

    StoredAgent agent(AgentKind::frequency, store);
    LabeledInstance inst;
    inst.id = "a";
    CHECK(agent.query(inst) == 0.87);
  }

  TEST_CASE("ingestion errors carry line numbers") {
    const auto bad_range = temp_file("vrl_agents_range.jsonl",
                                     "{\"instance_id\":\"a\",\"prob\":0.5}\n"
                                     "{\"instance_id\":\"b\",\"prob\":1.5}\n");
    CHECK_THROWS_WITH_AS(ingest_agent_file(bad_range.string(), AgentKind::semantic),
                         doctest::Contains(":2"), Error);

    const auto dup = temp_file("vrl_agents_dup.jsonl",
                               "{\"instance_id\":\"a\",\"prob\":0.5}\n"
                               "{\"instance_id\":\"a\",\"prob\":0.6}\n");
    CHECK_THROWS_WITH_AS(ingest_agent_file(dup.string(), AgentKind::semantic),
                         doctest::Contains("duplicate"), Error);

    const auto bad_json = temp_file("vrl_agents_json.jsonl", "{oops\n");
    CHECK_THROWS_AS(ingest_agent_file(bad_json.string(), AgentKind::semantic), Error);

    CHECK_THROWS_AS(ingest_agent_file("/nonexistent/agents.jsonl", AgentKind::semantic), Error);
  }

  TEST_CASE("a missing record names the failing perspective") {
    const auto sem = temp_file("vrl_agents_sem.jsonl", "{\"instance_id\":\"x\",\"prob\":0.2}\n");
    const auto dual = temp_file("vrl_agents_dual.jsonl", "{\"instance_id\":\"x\",\"prob\":0.9}\n");
    const auto freq = temp_file("vrl_agents_freq.jsonl", "{\"instance_id\":\"y\",\"prob\":0.4}\n");

    AgentSet agents(std::make_unique<StoredAgent>(
                        AgentKind::semantic, ingest_agent_file(sem.string(), AgentKind::semantic)),
                    std::make_unique<StoredAgent>(
                        AgentKind::frequency, ingest_agent_file(freq.string(), AgentKind::frequency)),
                    std::make_unique<StoredAgent>(
                        AgentKind::dual_stream, ingest_agent_file(dual.string(), AgentKind::dual_stream)));

    LabeledInstance inst;
    inst.id = "x";  // frequency store only has "y"
    CHECK_THROWS_WITH_AS(agents.opinions(inst), doctest::Contains("frequency"), Error);
  }

  TEST_CASE("opinions map kinds onto the fixed key order") {
    const SyntheticWorld world(77, 3);
    LabeledInstance inst;
    inst.id = "k";
    inst.features = {1.0, 0.0, 0.0};

    // Distinguishable stores make any key-order mixup visible.
    const auto sem = temp_file("vrl_order_sem.jsonl", "{\"instance_id\":\"k\",\"prob\":0.1}\n");
    const auto freq = temp_file("vrl_order_freq.jsonl", "{\"instance_id\":\"k\",\"prob\":0.2}\n");
    const auto dual = temp_file("vrl_order_dual.jsonl", "{\"instance_id\":\"k\",\"prob\":0.3}\n");
    AgentSet agents(std::make_unique<StoredAgent>(
                        AgentKind::semantic, ingest_agent_file(sem.string(), AgentKind::semantic)),
                    std::make_unique<StoredAgent>(
                        AgentKind::frequency, ingest_agent_file(freq.string(), AgentKind::frequency)),
                    std::make_unique<StoredAgent>(
                        AgentKind::dual_stream, ingest_agent_file(dual.string(), AgentKind::dual_stream)));
    const AgentOpinions o = agents.opinions(inst);
    CHECK(o.semantic == 0.1);
    CHECK(o.frequency == 0.2);
    CHECK(o.dual == 0.3);
  }
}
