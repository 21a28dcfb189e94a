#include "itws/mock_fleet.hpp"

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "itws/attack_model.hpp"
#include "itws/xml.hpp"

namespace itws {

namespace {

using json = nlohmann::json;

constexpr uint32_t kBucketCount = 1024;

uint32_t process_hash_seed() {
  static const uint32_t seed = [] {
    std::random_device rd;
    return static_cast<uint32_t>(rd());
  }();
  return seed;
}

uint32_t randomized_hash(std::string_view key, uint32_t seed) {
  uint32_t h = 2166136261u ^ seed;
  for (unsigned char c : key) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

// Insert-with-linear-chain-scan; returns the number of key comparisons. A
// weak hash sends crafted keys to one chain, so k keys cost O(k^2) probes.
class CollisionTable {
 public:
  explicit CollisionTable(MockServiceProfile::Hash model)
      : model_(model), buckets_(kBucketCount) {}

  uint64_t insert(std::string_view key) {
    uint32_t bucket = model_ == MockServiceProfile::Hash::WeakHash
                          ? weak_hash_bucket(key)
                          : randomized_hash(key, process_hash_seed()) % kBucketCount;
    auto& chain = buckets_[bucket];
    uint64_t probes = 0;
    for (const std::string& existing : chain) {
      ++probes;
      if (existing == key) return probes;
    }
    chain.emplace_back(key);
    return probes;
  }

 private:
  MockServiceProfile::Hash model_;
  std::vector<std::vector<std::string>> buckets_;
};

struct ParsedRequest {
  bool ok = false;
  std::string fault_reason;
  std::string body_operation;                  // first child of Body
  std::map<std::string, std::string> fields;   // extracted parameters
  size_t element_count = 0;
  uint64_t hash_probes = 0;
};

const std::map<std::string, std::string, std::less<>>& known_fields() {
  static const std::map<std::string, std::string, std::less<>> kFields = {
      {"symbol", ""}, {"quantity", ""}};
  return kFields;
}

// Eager model: materialize the whole tree, then pull parameters from the
// operation element's known children. Unknown children are ignored.
ParsedRequest parse_eager(const std::string& envelope, CollisionTable& table) {
  ParsedRequest out;
  xml::Document doc;
  try {
    doc = xml::parse_tree(envelope);
  } catch (const Error& e) {
    out.fault_reason = "request rejected: malformed envelope";
    return out;
  }
  out.element_count = doc.element_count();
  for (const auto& node : doc.nodes)
    for (const auto& [name, value] : node.attrs) out.hash_probes += table.insert(name);

  size_t body = doc.find_child(0, "Body");
  if (body == xml::kNoNode || doc.nodes[body].children.empty()) {
    out.fault_reason = "request rejected: no operation element";
    return out;
  }
  size_t op = doc.nodes[body].children.front();
  out.body_operation = std::string(xml::local_name(doc.nodes[op].name));
  for (size_t child : doc.nodes[op].children) {
    std::string local(xml::local_name(doc.nodes[child].name));
    if (known_fields().count(local)) out.fields[local] = doc.nodes[child].text;
  }
  out.ok = true;
  return out;
}

// Streaming model: one bounded pass. Parameter collection is deliberately
// naive: text accrues to the most recent recognized field, so content after
// an unknown sibling element still lands in that field.
ParsedRequest parse_streaming(const std::string& envelope, int depth_limit,
                              CollisionTable& table) {
  ParsedRequest out;
  xml::StreamReader reader(envelope);
  xml::Event ev;
  int depth = 0;
  bool in_body = false;
  int body_depth = 0;
  std::string current_field;

  while (reader.next(ev)) {
    switch (ev.kind) {
      case xml::EventKind::StartElement: {
        ++out.element_count;
        int entered = depth + 1;
        if (entered > depth_limit) {
          out.fault_reason = "request rejected: nesting depth limit exceeded";
          return out;
        }
        xml::for_each_attr(ev.raw_attrs, [&](std::string_view n, std::string_view) {
          out.hash_probes += table.insert(n);
        });
        std::string local(xml::local_name(ev.name));
        if (in_body && entered == body_depth + 1 && out.body_operation.empty())
          out.body_operation = local;
        if (known_fields().count(local)) current_field = local;
        if (!ev.self_closing) {
          depth = entered;
          if (local == "Body" && !in_body) {
            in_body = true;
            body_depth = depth;
          }
        }
        break;
      }
      case xml::EventKind::EndElement:
        if (depth > 0) {
          if (in_body && depth == body_depth) in_body = false;
          --depth;
        }
        break;
      case xml::EventKind::Text:
        if (!current_field.empty())
          out.fields[current_field] += xml::decode_entities(ev.text);
        break;
      case xml::EventKind::CData:
        if (!current_field.empty()) out.fields[current_field] += std::string(ev.text);
        break;
      case xml::EventKind::BadSyntax:
        out.fault_reason = "request rejected: malformed envelope";
        return out;
      default:
        break;
    }
  }
  if (out.body_operation.empty()) {
    out.fault_reason = "request rejected: no operation element";
    return out;
  }
  out.ok = true;
  return out;
}

std::string fault_body(std::string_view reason) {
  std::string body = "<env:Fault><env:Code>env:Receiver</env:Code><env:Reason>";
  body += xml::escape_text(reason);
  body += "</env:Reason></env:Fault>";
  return wrap_soap_body(body);
}

std::string format_price(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  return buf;
}

std::string header_operation(const net::Headers& headers) {
  const std::string* action = net::find_header(headers, kSoapActionHeader);
  if (!action) return {};
  std::string value = *action;
  std::erase(value, '"');
  size_t slash = value.rfind('/');
  return slash == std::string::npos ? value : value.substr(slash + 1);
}

}  // namespace

double quote_price(std::string_view symbol) {
  static const std::map<std::string, double, std::less<>> kQuotes = {
      {"ACME", 123.45},  {"GLOBEX", 57.30},   {"INITECH", 8.25},
      {"UMBRELLA", 451.00}, {"HOOLI", 310.10},
  };
  auto it = kQuotes.find(symbol);
  return it == kQuotes.end() ? 1.00 : it->second;
}

std::string MockServiceProfile::framework_label() const {
  return parser_model == Parser::EagerTree ? "eager-tree" : "streaming";
}

void MockServiceProfile::validate() const {
  if (id.empty()) throw Error(ErrorCode::InvalidParameter, "mock profile needs an id");
  if (parser_model == Parser::EagerTree && per_element_cost.count() <= 0)
    throw Error(ErrorCode::InvalidParameter,
                "eager-tree profile needs per_element_cost > 0: " + id);
  if (parser_model == Parser::Streaming && depth_limit < 1)
    throw Error(ErrorCode::InvalidParameter,
                "streaming profile needs depth_limit >= 1: " + id);
  if (base_latency.count() < 0 || slow_delay.count() < 0 || hash_probe_cost.count() < 0)
    throw Error(ErrorCode::InvalidParameter, "mock latencies must be >= 0: " + id);
}

MockService::MockService(MockServiceProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
  server_.set_handler([this](net::HttpRequest& req) { return handle(req); });
}

MockService::~MockService() { stop(); }

uint16_t MockService::start(const std::string& host, uint16_t port) {
  host_ = host;
  uint16_t bound = server_.start(host, port);
  if (profile_.fault_mode == MockServiceProfile::Fault::Crash) server_.pause_accepting();
  return bound;
}

void MockService::stop() { server_.stop(); }

std::string MockService::endpoint_url() const {
  return "http://" + host_ + ":" + std::to_string(server_.port());
}

FleetStats MockService::stats() const {
  FleetStats s;
  s.requests_served = requests_served_.load();
  s.executions_completed = executions_completed_.load();
  s.executions_cancelled = executions_cancelled_.load();
  std::lock_guard lock(ops_mu_);
  s.operations_executed = operations_executed_;
  return s;
}

void MockService::set_fault_mode(MockServiceProfile::Fault mode) {
  profile_.fault_mode = mode;
  if (mode == MockServiceProfile::Fault::Crash) {
    server_.pause_accepting();
  } else {
    server_.resume_accepting();
  }
}

net::HttpResponse MockService::handle(net::HttpRequest& req) {
  if (req.path == "/__stats") {
    FleetStats s = stats();
    json j{{"id", profile_.id},
           {"requests_served", s.requests_served},
           {"executions_completed", s.executions_completed},
           {"executions_cancelled", s.executions_cancelled},
           {"operations_executed", s.operations_executed}};
    return {200, {{"Content-Type", "application/json"}}, j.dump(2) + "\n"};
  }
  if (req.path == "/__fault") {
    try {
      json j = json::parse(req.body);
      std::string mode = j.value("fault_mode", "none");
      if (mode == "none") set_fault_mode(MockServiceProfile::Fault::None);
      else if (mode == "crash") set_fault_mode(MockServiceProfile::Fault::Crash);
      else if (mode == "byzantine") set_fault_mode(MockServiceProfile::Fault::ByzantineWrongAnswer);
      else if (mode == "slow") set_fault_mode(MockServiceProfile::Fault::Slow);
      else return {400, {}, "unknown fault mode\n"};
      if (j.contains("slow_delay_ms"))
        profile_.slow_delay = std::chrono::milliseconds(j["slow_delay_ms"].get<int64_t>());
      return {200, {{"Content-Type", "application/json"}}, "{\"ok\":true}\n"};
    } catch (const json::exception&) {
      return {400, {}, "bad fault control body\n"};
    }
  }
  return run_service_request(req);
}

net::HttpResponse MockService::run_service_request(net::HttpRequest& req) {
  requests_served_.fetch_add(1);

  CollisionTable table(profile_.hash_model);
  ParsedRequest parsed =
      profile_.parser_model == MockServiceProfile::Parser::EagerTree
          ? parse_eager(req.body, table)
          : parse_streaming(req.body, profile_.depth_limit, table);

  // Simulated processing cost. Eager parsing pays per element; both parser
  // models pay for collision-chain scans.
  auto cost = profile_.base_latency;
  if (parsed.ok && profile_.parser_model == MockServiceProfile::Parser::EagerTree)
    cost += std::chrono::duration_cast<std::chrono::milliseconds>(
        profile_.per_element_cost * static_cast<int64_t>(parsed.element_count));
  cost += std::chrono::duration_cast<std::chrono::milliseconds>(
      profile_.hash_probe_cost * static_cast<int64_t>(parsed.hash_probes));
  if (profile_.fault_mode == MockServiceProfile::Fault::Slow) cost += profile_.slow_delay;

  if (req.wait_cancellable(cost)) {
    executions_cancelled_.fetch_add(1);
    return {0, {}, {}};  // peer gone; nothing to write
  }

  if (!parsed.ok) {
    executions_completed_.fetch_add(1);
    return {200, {}, fault_body(parsed.fault_reason)};
  }

  std::string op = profile_.dispatch_model == MockServiceProfile::Dispatch::HeaderTrusting
                       ? header_operation(req.headers)
                       : std::string();
  if (op.empty()) op = parsed.body_operation;

  std::string symbol = parsed.fields.count("symbol") ? parsed.fields["symbol"] : "";
  const bool byzantine = profile_.fault_mode == MockServiceProfile::Fault::ByzantineWrongAnswer;

  std::string body;
  if (op == kOpGetQuote) {
    double price = byzantine ? 999999.99 : quote_price(symbol);
    body = "<GetQuoteResponse xmlns=\"urn:stockquote\"><symbol>" +
           xml::escape_text(symbol) + "</symbol><price>" + format_price(price) +
           "</price><" + std::string(kExecutedOpElement) + ">GetQuote</" +
           std::string(kExecutedOpElement) + "></GetQuoteResponse>";
  } else if (op == kOpPurchaseStock) {
    int quantity = 1;
    if (parsed.fields.count("quantity")) {
      try {
        quantity = std::max(1, std::stoi(parsed.fields["quantity"]));
      } catch (...) {
        quantity = 1;
      }
    }
    double total = (byzantine ? 999999.99 : quote_price(symbol)) * quantity;
    body = "<PurchaseStockResponse xmlns=\"urn:stockquote\"><symbol>" +
           xml::escape_text(symbol) + "</symbol><quantity>" + std::to_string(quantity) +
           "</quantity><total>" + format_price(total) + "</total><confirmation>CNF-" +
           xml::escape_text(symbol) + "-" + std::to_string(quantity) +
           "</confirmation><" + std::string(kExecutedOpElement) + ">PurchaseStock</" +
           std::string(kExecutedOpElement) + "></PurchaseStockResponse>";
  } else {
    executions_completed_.fetch_add(1);
    return {200, {}, fault_body("request rejected: unknown operation")};
  }

  executions_completed_.fetch_add(1);
  {
    std::lock_guard lock(ops_mu_);
    operations_executed_[op] += 1;
  }
  return {200, {}, wrap_soap_body(body)};
}

MockFleet::~MockFleet() { stop_all(); }

std::vector<std::pair<std::string, std::string>> MockFleet::spawn(
    const std::vector<MockServiceProfile>& profiles, const std::string& host,
    uint16_t base_port) {
  for (size_t i = 0; i < profiles.size(); ++i)
    for (size_t j = i + 1; j < profiles.size(); ++j)
      if (profiles[i].id == profiles[j].id)
        throw Error(ErrorCode::InvalidParameter, "duplicate profile id: " + profiles[i].id);

  std::vector<std::pair<std::string, std::string>> endpoints;
  uint16_t next_auto = base_port;
  for (const auto& profile : profiles) {
    auto svc = std::make_unique<MockService>(profile);
    uint16_t port = profile.port != 0 ? profile.port : next_auto;
    if (profile.port == 0 && base_port != 0) ++next_auto;
    try {
      svc->start(host, port);
    } catch (const Error& e) {
      stop_all();
      throw Error(ErrorCode::SpawnError,
                  "cannot start mock '" + profile.id + "': " + e.what());
    }
    endpoints.emplace_back(profile.id, svc->endpoint_url());
    services_.push_back(std::move(svc));
  }
  return endpoints;
}

FleetStats MockFleet::stats(const std::string& id) const {
  for (const auto& svc : services_)
    if (svc->profile().id == id) return svc->stats();
  throw Error(ErrorCode::NotFound, "no mock service: " + id);
}

MockService& MockFleet::service(const std::string& id) {
  for (auto& svc : services_)
    if (svc->profile().id == id) return *svc;
  throw Error(ErrorCode::NotFound, "no mock service: " + id);
}

std::vector<std::string> MockFleet::ids() const {
  std::vector<std::string> out;
  for (const auto& svc : services_) out.push_back(svc->profile().id);
  return out;
}

void MockFleet::stop_all() {
  for (auto& svc : services_) svc->stop();
  services_.clear();
}

std::vector<MockServiceProfile> default_experiment_fleet() {
  std::vector<MockServiceProfile> fleet;
  auto eager = [](std::string id, double sla) {
    MockServiceProfile p;
    p.id = std::move(id);
    p.parser_model = MockServiceProfile::Parser::EagerTree;
    p.dispatch_model = MockServiceProfile::Dispatch::HeaderTrusting;
    p.hash_model = MockServiceProfile::Hash::WeakHash;
    p.sla_failure_rate = sla;
    return p;
  };
  auto streaming = [](std::string id, double sla) {
    MockServiceProfile p;
    p.id = std::move(id);
    p.parser_model = MockServiceProfile::Parser::Streaming;
    p.dispatch_model = MockServiceProfile::Dispatch::BodyBased;
    p.hash_model = MockServiceProfile::Hash::RandomizedHash;
    p.sla_failure_rate = sla;
    return p;
  };
  fleet.push_back(eager("eager-1", 0.020));
  fleet.push_back(eager("eager-2", 0.030));
  fleet.push_back(streaming("stream-1", 0.010));
  fleet.push_back(streaming("stream-2", 0.015));
  fleet.push_back(streaming("stream-3", 0.025));
  return fleet;
}

}  // namespace itws
