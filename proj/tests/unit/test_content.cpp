#include "doctest.h"
#include "../support/messages.hpp"
#include "situ/scenario.hpp"

using namespace situ;

TEST_CASE("encode and decode are mutually inverse on generated messages") {
  ContentLanguage lang = scenarioLanguage();
  SplitMix64 rng = SplitMix64::stream(11, "codec");
  int checked = 0;
  for (const auto& protocol : lang.protocols()) {
    for (const auto& performative : lang.performatives(protocol)) {
      for (int i = 0; i < 20; ++i) {
        MessageData d{static_cast<std::int64_t>(rng.below(1000)), "s", "r", protocol, performative, {}};
        for (const auto& f : lang.fields(protocol, performative)) d.content.push_back({f, gen::valid(lang.domain(f), rng)});
        Message m = lang.encode(d);
        CHECK(lang.decode(m) == d);
        CHECK(lang.encode(lang.decode(m)) == m);
        CHECK(fromWire(toWire(m)) == m);
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("out-of-domain values are malformed") {
  ContentLanguage lang = scenarioLanguage();
  SplitMix64 rng = SplitMix64::stream(12, "bad");
  for (const auto& protocol : lang.protocols()) {
    for (const auto& performative : lang.performatives(protocol)) {
      const auto& fields = lang.fields(protocol, performative);
      Message base{1, "s", "r", protocol, performative, Value::array()};
      for (const auto& f : fields) base.content.push_back(gen::valid(lang.domain(f), rng));
      CHECK_NOTHROW(lang.validate(base));
      for (std::size_t i = 0; i < fields.size(); ++i) {
        for (const auto& bad : gen::invalid(lang.domain(fields[i]), rng)) {
          Message m = base;
          m.content[i] = bad;
          CHECK_THROWS_AS(lang.decode(m), MalformedMessage);
        }
      }
      Message longer = base;
      longer.content.push_back(1);
      CHECK_THROWS_AS(lang.decode(longer), MalformedMessage);
      Message anonymous = base;
      anonymous.sender = "";
      CHECK_THROWS_AS(lang.decode(anonymous), MalformedMessage);
    }
  }
  Message unknown{1, "s", "r", kDynCnet, "shout", Value::array()};
  CHECK_THROWS_AS(lang.decode(unknown), MalformedMessage);
  unknown.protocol = "Nope";
  CHECK_THROWS_AS(lang.decode(unknown), MalformedMessage);
}

TEST_CASE("encode checks field names and order") {
  ContentLanguage lang;
  lang.defineTerm("a", Domain::text());
  lang.defineTerm("b", Domain::integer(0, 3));
  lang.definePerformative("P", "go", {"a", "b"}, true);
  CHECK(lang.isInitial("P", "go"));
  MessageData d{1, "s", "r", "P", "go", {{"b", 1}, {"a", "x"}}};
  CHECK_THROWS_AS(lang.encode(d), MalformedMessage);
  d.content = {{"a", "x"}, {"b", 1}};
  CHECK(lang.encode(d).content == Value::array({"x", 1}));
  CHECK(d.get("b") == 1);
  CHECK_THROWS_AS(d.get("c"), MalformedMessage);
  CHECK_THROWS(lang.definePerformative("P", "bad", {"zz"}));
}

TEST_CASE("wire envelope errors") {
  CHECK_THROWS_AS(fromWire("not json"), MalformedMessage);
  CHECK_THROWS_AS(fromWire("[1,2]"), MalformedMessage);
  CHECK_THROWS_AS(fromWire("{\"id\":1}"), MalformedMessage);
  Message m{3, "a", "b", "P", "x", Value::array({1})};
  CHECK(toWire(m) == "{\"content\":[1],\"id\":3,\"performative\":\"x\",\"protocol\":\"P\",\"receiver\":\"b\",\"sender\":\"a\"}");
}

TEST_CASE("receiver forms") {
  CHECK((parseReceiver("all").kind == ReceiverSpec::Kind::broadcast));
  ReceiverSpec s = parseReceiver("150m");
  CHECK((s.kind == ReceiverSpec::Kind::scope));
  CHECK(s.meters == 150.0);
  CHECK((parseReceiver("12.5m").kind == ReceiverSpec::Kind::scope));
  CHECK((parseReceiver("m").kind == ReceiverSpec::Kind::agent));
  CHECK(parseReceiver("tom").agent == "tom");
  CHECK(parseReceiver("a1").agent == "a1");
}
