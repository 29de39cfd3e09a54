#include "situ/content.hpp"

#include <charconv>
#include <cmath>

namespace situ {

const Value& MessageData::get(const std::string& name) const {
  for (const auto& f : content) {
    if (f.name == name) return f.value;
  }
  throw MalformedMessage("message " + std::to_string(id) + " has no field '" + name + "'");
}

namespace {

bool isNonEmptyString(const Value& v) { return v.is_string() && !v.get<std::string>().empty(); }

bool isTick(const Value& v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; }

bool admitsBooking(const Value& v) {
  if (!v.is_object()) return false;
  for (const char* key : {"bookingId", "vehicleId", "entries", "lastRefreshTick"}) {
    if (!v.contains(key)) return false;
  }
  if (!v["bookingId"].is_number_integer() || !isNonEmptyString(v["vehicleId"]) ||
      !isTick(v["lastRefreshTick"]) || !v["entries"].is_array()) {
    return false;
  }
  const Value& entries = v["entries"];
  if (entries.empty()) return false;
  std::int64_t lastEnd = -1;
  bool prefixAcked = true;
  for (const auto& e : entries) {
    if (!e.is_object() || e.size() != 5) return false;
    if (!isNonEmptyString(e.value("agent", Value())) || !e.value("edge", Value()).is_number_integer() ||
        !isTick(e.value("start", Value())) || !isTick(e.value("end", Value())) || !e.value("acked", Value()).is_boolean()) {
      return false;
    }
    auto start = e["start"].get<std::int64_t>();
    auto end = e["end"].get<std::int64_t>();
    if (end < start || start <= lastEnd) return false;
    lastEnd = end;
    bool acked = e["acked"].get<bool>();
    if (acked && !prefixAcked) return false;  // acks form a prefix
    prefixAcked = acked;
  }
  return true;
}

}  // namespace

bool Domain::admits(const Value& v) const {
  switch (kind) {
    case Kind::text:
      return isNonEmptyString(v);
    case Kind::integer:
      if (!v.is_number_integer()) return false;
      return v.get<std::int64_t>() >= lo && v.get<std::int64_t>() <= hi;
    case Kind::number:
      return v.is_number() && std::isfinite(v.get<double>()) && v.get<double>() >= 0.0;
    case Kind::oneOf:
      return v.is_string() && options.count(v.get<std::string>()) != 0;
    case Kind::path:
      if (!v.is_array() || v.empty()) return false;
      for (const auto& n : v) {
        if (!isNonEmptyString(n)) return false;
      }
      return true;
    case Kind::booking:
      return admitsBooking(v);
    case Kind::any:
      return true;
  }
  return false;
}

void ContentLanguage::defineTerm(const std::string& term, Domain domain) {
  ontology_[term] = std::move(domain);
}

void ContentLanguage::definePerformative(const std::string& protocol,
                                         const std::string& performative,
                                         std::vector<std::string> fields, bool initial) {
  for (const auto& f : fields) {
    if (!ontology_.count(f)) throw Error("term '" + f + "' missing from ontology");
  }
  protocols_[protocol][performative] = Schema{std::move(fields), initial};
}

bool ContentLanguage::knows(const std::string& protocol, const std::string& performative) const {
  auto p = protocols_.find(protocol);
  return p != protocols_.end() && p->second.count(performative) != 0;
}

const ContentLanguage::Schema& ContentLanguage::schema(const std::string& protocol,
                                                       const std::string& performative) const {
  auto p = protocols_.find(protocol);
  if (p == protocols_.end()) throw MalformedMessage("unknown protocol '" + protocol + "'");
  auto s = p->second.find(performative);
  if (s == p->second.end()) {
    throw MalformedMessage("unknown performative '" + performative + "' in " + protocol);
  }
  return s->second;
}

bool ContentLanguage::isInitial(const std::string& protocol, const std::string& performative) const {
  return knows(protocol, performative) && schema(protocol, performative).initial;
}

const std::vector<std::string>& ContentLanguage::fields(const std::string& protocol,
                                                        const std::string& performative) const {
  return schema(protocol, performative).fields;
}

const Domain& ContentLanguage::domain(const std::string& term) const {
  auto it = ontology_.find(term);
  if (it == ontology_.end()) throw Error("unknown term '" + term + "'");
  return it->second;
}

std::vector<std::string> ContentLanguage::protocols() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : protocols_) out.push_back(name);
  return out;
}

std::vector<std::string> ContentLanguage::performatives(const std::string& protocol) const {
  std::vector<std::string> out;
  auto p = protocols_.find(protocol);
  if (p == protocols_.end()) return out;
  for (const auto& [name, _] : p->second) out.push_back(name);
  return out;
}

void ContentLanguage::validate(const Message& m) const {
  const Schema& s = schema(m.protocol, m.performative);
  if (m.sender.empty() || m.receiver.empty()) throw MalformedMessage("missing sender or receiver");
  if (!m.content.is_array()) throw MalformedMessage("content is not a sequence");
  if (m.content.size() != s.fields.size()) {
    throw MalformedMessage(m.performative + " expects " + std::to_string(s.fields.size()) +
                           " fields, got " + std::to_string(m.content.size()));
  }
  for (std::size_t i = 0; i < s.fields.size(); ++i) {
    if (!domain(s.fields[i]).admits(m.content[i])) {
      throw MalformedMessage("field '" + s.fields[i] + "' of " + m.performative +
                             " out of domain: " + m.content[i].dump());
    }
  }
}

MessageData ContentLanguage::decode(const Message& m) const {
  validate(m);
  const Schema& s = schema(m.protocol, m.performative);
  MessageData d{m.id, m.sender, m.receiver, m.protocol, m.performative, {}};
  for (std::size_t i = 0; i < s.fields.size(); ++i) d.content.push_back({s.fields[i], m.content[i]});
  return d;
}

Message ContentLanguage::encode(const MessageData& d) const {
  const Schema& s = schema(d.protocol, d.performative);
  if (d.content.size() != s.fields.size()) {
    throw MalformedMessage(d.performative + " expects " + std::to_string(s.fields.size()) + " fields");
  }
  Message m{d.id, d.sender, d.receiver, d.protocol, d.performative, Value::array()};
  for (std::size_t i = 0; i < s.fields.size(); ++i) {
    if (d.content[i].name != s.fields[i]) {
      throw MalformedMessage("field " + std::to_string(i) + " should be '" + s.fields[i] + "'");
    }
    m.content.push_back(d.content[i].value);
  }
  validate(m);
  return m;
}

Value messageToValue(const Message& m) {
  return Value{{"content", m.content},   {"id", m.id},
               {"performative", m.performative}, {"protocol", m.protocol},
               {"receiver", m.receiver}, {"sender", m.sender}};
}

Message messageFromValue(const Value& v) {
  if (!v.is_object()) throw MalformedMessage("message envelope is not an object");
  try {
    Message m;
    m.id = v.at("id").get<std::int64_t>();
    m.sender = v.at("sender").get<std::string>();
    m.receiver = v.at("receiver").get<std::string>();
    m.protocol = v.at("protocol").get<std::string>();
    m.performative = v.at("performative").get<std::string>();
    m.content = v.at("content");
    if (!m.content.is_array()) throw MalformedMessage("content is not a sequence");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedMessage(std::string("bad message envelope: ") + e.what());
  }
}

std::string toWire(const Message& m) { return messageToValue(m).dump(); }

Message fromWire(const std::string& text) {
  Value v = Value::parse(text, nullptr, false);
  if (v.is_discarded()) throw MalformedMessage("undecodable transmission");
  return messageFromValue(v);
}

ReceiverSpec parseReceiver(const std::string& receiver) {
  ReceiverSpec spec;
  if (receiver == "all") {
    spec.kind = ReceiverSpec::Kind::broadcast;
    return spec;
  }
  if (receiver.size() > 1 && receiver.back() == 'm') {
    double meters = 0.0;
    const char* first = receiver.data();
    const char* last = receiver.data() + receiver.size() - 1;
    auto res = std::from_chars(first, last, meters);
    if (res.ec == std::errc() && res.ptr == last && meters >= 0.0) {
      spec.kind = ReceiverSpec::Kind::scope;
      spec.meters = meters;
      return spec;
    }
  }
  spec.kind = ReceiverSpec::Kind::agent;
  spec.agent = receiver;
  return spec;
}

}  // namespace situ
