#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "situ/value.hpp"

namespace situ {

/// Raw communicative act as it travels through the environment. `content`
/// is an ordered list of values whose meaning depends on the performative.
struct Message {
  std::int64_t id = 0;
  std::string sender;
  std::string receiver;  // agent id, "<n>m" scope, or "all"
  std::string protocol;
  std::string performative;
  Value content = Value::array();

  friend bool operator==(const Message&, const Message&) = default;
};

struct ContentField {
  std::string name;
  Value value;

  friend bool operator==(const ContentField&, const ContentField&) = default;
};

/// Decoded message: content fields are named and domain checked.
struct MessageData {
  std::int64_t id = 0;
  std::string sender;
  std::string receiver;
  std::string protocol;
  std::string performative;
  std::vector<ContentField> content;

  const Value& get(const std::string& name) const;
  friend bool operator==(const MessageData&, const MessageData&) = default;
};

class MalformedMessage : public Error {
 public:
  using Error::Error;
};

/// Value domain of one ontology term.
struct Domain {
  enum class Kind { text, integer, number, oneOf, path, booking, any };

  Kind kind = Kind::any;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::set<std::string> options;

  static Domain text() { return {Kind::text, 0, 0, {}}; }
  static Domain integer(std::int64_t lo, std::int64_t hi) { return {Kind::integer, lo, hi, {}}; }
  static Domain nonNegative() { return {Kind::number, 0, 0, {}}; }
  static Domain oneOf(std::set<std::string> opts) { return {Kind::oneOf, 0, 0, std::move(opts)}; }
  static Domain path() { return {Kind::path, 0, 0, {}}; }
  static Domain booking() { return {Kind::booking, 0, 0, {}}; }
  static Domain any() { return {Kind::any, 0, 0, {}}; }

  bool admits(const Value& v) const;
};

/// Ontology (term -> domain) plus per-protocol performative schemas
/// (performative -> ordered term list). Scenario-registered data.
class ContentLanguage {
 public:
  void defineTerm(const std::string& term, Domain domain);
  void definePerformative(const std::string& protocol, const std::string& performative,
                          std::vector<std::string> fields, bool initial = false);

  bool knows(const std::string& protocol, const std::string& performative) const;
  bool isInitial(const std::string& protocol, const std::string& performative) const;
  const std::vector<std::string>& fields(const std::string& protocol,
                                         const std::string& performative) const;
  const Domain& domain(const std::string& term) const;
  std::vector<std::string> protocols() const;
  std::vector<std::string> performatives(const std::string& protocol) const;

  /// Throws MalformedMessage on unknown performative, wrong arity, or an
  /// out-of-domain value.
  void validate(const Message& message) const;
  MessageData decode(const Message& message) const;
  Message encode(const MessageData& data) const;

 private:
  struct Schema {
    std::vector<std::string> fields;
    bool initial = false;
  };
  const Schema& schema(const std::string& protocol, const std::string& performative) const;

  std::map<std::string, Domain> ontology_;
  std::map<std::string, std::map<std::string, Schema>> protocols_;
};

/// Wire form of a message (canonical JSON text) and its inverse. The
/// inverse only checks the envelope, not the content schema.
std::string toWire(const Message& message);
Message fromWire(const std::string& text);
Value messageToValue(const Message& message);
Message messageFromValue(const Value& value);

/// Receiver forms understood by the communication service.
struct ReceiverSpec {
  enum class Kind { agent, scope, broadcast } kind = Kind::agent;
  std::string agent;
  double meters = 0.0;
};
ReceiverSpec parseReceiver(const std::string& receiver);

}  // namespace situ
