// SPDX-License-Identifier: Apache-2.0
#include "protoseq/service.hpp"

#include <cstdlib>
#include <regex>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "protoseq/checkpoint.hpp"
#include "protoseq/explainer.hpp"
#include "protoseq/json_io.hpp"
#include "protoseq/refinement.hpp"

namespace protoseq {

using nlohmann::json;

const char *job_status_name(JobStatus s) {
  switch (s) {
  case JobStatus::Queued: return "queued";
  case JobStatus::Running: return "running";
  case JobStatus::Done: return "done";
  case JobStatus::Failed: return "failed";
  }
  return "queued";
}

namespace {

HttpResponse reply(int status, const json &body) { return {status, body.dump()}; }
HttpResponse error(int status, const std::string &message) {
  return reply(status, json{{"error", message}});
}

const Vocabulary *token_vocab(const PrototypeModel &model) {
  return model.encoder.config().input_kind == StepKind::Token ? &model.vocab : nullptr;
}

json job_json(const SteeringJob &j) {
  json out = {{"id", j.id},
              {"kind", "finetune"},
              {"status", job_status_name(j.status)},
              {"progress", {{"epoch", j.epoch}, {"total", j.total_epochs}}}};
  if (!j.checkpoint.empty())
    out["checkpoint"] = j.checkpoint;
  if (!j.error.empty())
    out["error"] = j.error;
  return out;
}

json label_names(const PrototypeModel &model, const std::vector<int> &labels) {
  json out = json::array();
  for (int c : labels)
    out.push_back(model.class_name(static_cast<std::size_t>(c)));
  return out;
}

std::optional<std::size_t> parse_index(const std::string &s) {
  if (s.empty() || s.size() > 9 || s.find_first_not_of("0123456789") != std::string::npos)
    return std::nullopt;
  return static_cast<std::size_t>(std::stoul(s));
}

} // namespace

SteeringService::SteeringService(PrototypeModel model, Dataset train_data, ServiceOptions options)
    : data_(std::move(train_data)), options_(std::move(options)),
      current_(std::make_shared<const PrototypeModel>(std::move(model))) {}

SteeringService::~SteeringService() {
  if (worker_.joinable())
    worker_.join();
}

std::shared_ptr<const PrototypeModel> SteeringService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return current_;
}

std::optional<SteeringJob> SteeringService::job(const std::string &id) const {
  std::lock_guard lock(jobs_mutex_);
  if (auto it = jobs_.find(id); it != jobs_.end())
    return it->second;
  return std::nullopt;
}

void SteeringService::wait_idle() {
  std::unique_lock lock(jobs_mutex_);
  jobs_cv_.wait(lock, [&] { return !job_active_.load(); });
}

void SteeringService::commit(std::shared_ptr<const PrototypeModel> next) {
  if (!options_.checkpoint_path.empty())
    save_checkpoint(*next, options_.checkpoint_path);
  std::lock_guard lock(snapshot_mutex_);
  current_ = std::move(next);
}

HttpResponse SteeringService::handle(const HttpRequest &req) {
  static const std::regex neighbors_re(R"(^/v1/prototypes/([^/]+)/neighbors$)");
  static const std::regex job_re(R"(^/v1/jobs/([^/]+)$)");
  try {
    std::smatch m;
    if (req.path == "/v1/prototypes")
      return req.method == "GET" ? list_prototypes() : error(405, "use GET");
    if (std::regex_match(req.path, m, neighbors_re))
      return req.method == "GET" ? prototype_neighbors(m[1], req) : error(405, "use GET");
    if (req.path == "/v1/predict")
      return req.method == "POST" ? predict(req) : error(405, "use POST");
    if (req.path == "/v1/edits")
      return req.method == "POST" ? post_edit(req) : error(405, "use POST");
    if (req.path == "/v1/finetune")
      return req.method == "POST" ? start_finetune(req) : error(405, "use POST");
    if (std::regex_match(req.path, m, job_re))
      return req.method == "GET" ? get_job(m[1]) : error(405, "use GET");
    return error(404, "no route for " + req.path);
  } catch (const json::exception &e) {
    return error(400, std::string("bad request body: ") + e.what());
  } catch (const std::out_of_range &e) {
    return error(404, e.what());
  } catch (const std::invalid_argument &e) {
    return error(400, e.what());
  } catch (const std::exception &e) {
    return error(500, e.what());
  }
}

HttpResponse SteeringService::list_prototypes() const {
  const auto model = snapshot();
  const auto eff = effective_prototypes(*model);
  const Vocabulary *vocab = token_vocab(*model);
  json list = json::array();
  for (std::size_t i = 0; i < model->k(); ++i) {
    json weights = json::array();
    for (std::size_t c = 0; c < model->num_classes; ++c)
      weights.push_back(model->weights.value(c, i));
    json p = {{"id", i}, {"weights", weights}, {"effective", static_cast<bool>(eff[i])}};
    if (model->provenance[i]) {
      p["provenance"] = render_steps(*model->provenance[i], vocab);
      p["sequence"] = sequence_to_json(*model->provenance[i], vocab);
    } else {
      p["provenance"] = nullptr;
    }
    list.push_back(std::move(p));
  }
  json classes = json::array();
  for (std::size_t c = 0; c < model->num_classes; ++c)
    classes.push_back(model->class_name(c));
  return reply(200, json{{"k", model->k()}, {"classes", classes}, {"prototypes", list}});
}

HttpResponse SteeringService::prototype_neighbors(const std::string &id_text,
                                                  const HttpRequest &req) const {
  const auto model = snapshot();
  const auto id = parse_index(id_text);
  if (!id || *id >= model->k())
    return error(404, "prototype " + id_text + " does not exist");
  std::size_t n = 5;
  if (auto it = req.query.find("n"); it != req.query.end()) {
    const auto parsed = parse_index(it->second);
    if (!parsed || *parsed < 1)
      return error(400, "n must be a positive integer");
    n = *parsed;
  }
  const auto found = neighbors(*model, *id, data_.sequences, n);
  const Vocabulary *vocab = token_vocab(*model);
  json list = json::array();
  for (const auto &nb : found) {
    const Sequence &s = data_.sequences[nb.index];
    list.push_back({{"index", nb.index},
                    {"similarity", nb.similarity},
                    {"text", render_steps(s, vocab)},
                    {"labels", label_names(*model, s.labels)}});
  }
  return reply(200, json{{"prototype", *id}, {"neighbors", list}});
}

HttpResponse SteeringService::predict(const HttpRequest &req) const {
  const auto model = snapshot();
  const json body = json::parse(req.body);
  const EncoderConfig &ec = model->encoder.config();
  const json &payload = body.contains("sequence") ? body.at("sequence") : body;
  const Sequence seq = sequence_from_json(payload, ec.input_kind, ec.input_width, token_vocab(*model));
  if (seq.empty())
    return error(400, "sequence is empty");
  const std::size_t top = body.value("top", options_.explain_top);
  const double min_sim = body.value("min_similarity", 0.0);
  const Explanation e = explain(*model, seq, top, min_sim);
  json predicted = json::array();
  for (std::size_t c : e.predicted)
    predicted.push_back(model->class_name(c));
  json contributions = json::array();
  for (const auto &c : e.contributions) {
    json item = {{"prototype", c.prototype}, {"similarity", c.similarity}, {"weights", c.weights}};
    item["provenance"] =
        c.provenance ? json(render_steps(*c.provenance, token_vocab(*model))) : json(nullptr);
    contributions.push_back(std::move(item));
  }
  return reply(200, json{{"scores", e.result.scores},
                         {"logits", e.result.logits},
                         {"similarities", e.result.similarities},
                         {"predicted", predicted},
                         {"contributions", contributions},
                         {"explanation", render_explanation(*model, e)}});
}

HttpResponse SteeringService::post_edit(const HttpRequest &req) {
  std::lock_guard writer(writer_mutex_);
  if (job_active_.load())
    return error(409, "a fine-tune job is running; edits are locked until it finishes");
  const auto base = snapshot();
  const RefinementEdit edit = edit_from_json(json::parse(req.body), *base);
  auto next = std::make_shared<PrototypeModel>(*base);
  apply_edit(*next, edit);
  commit(next);
  if (!options_.journal_path.empty())
    EditJournal(options_.journal_path).append(edit, *base);
  return reply(200, json{{"applied", edit_to_json(edit, *base)}, {"k", next->k()}});
}

HttpResponse SteeringService::start_finetune(const HttpRequest &req) {
  std::lock_guard writer(writer_mutex_);
  const json body = req.body.empty() ? json::object() : json::parse(req.body);
  const long long epochs = body.value("epochs", 5LL);
  if (epochs < 0 || epochs > 10000)
    return error(400, "epochs must be between 0 and 10000");
  if (job_active_.load())
    return error(409, "a fine-tune job is already running");
  if (worker_.joinable())
    worker_.join();
  SteeringJob job;
  {
    std::lock_guard lock(jobs_mutex_);
    job.id = std::to_string(next_job_++);
    job.total_epochs = static_cast<std::size_t>(epochs);
    jobs_[job.id] = job;
    job_active_ = true;
  }
  worker_ = std::thread(&SteeringService::run_job, this, job.id, job.total_epochs);
  return reply(202, job_json(job));
}

void SteeringService::run_job(std::string id, std::size_t epochs) {
  const auto update = [&](auto &&fn) {
    std::lock_guard lock(jobs_mutex_);
    fn(jobs_[id]);
  };
  update([](SteeringJob &j) { j.status = JobStatus::Running; });
  try {
    auto next = std::make_shared<PrototypeModel>(*snapshot());
    TrainOptions opts;
    opts.on_epoch = [&](const EpochRecord &r) { update([&](SteeringJob &j) { j.epoch = r.epoch; }); };
    finetune(*next, data_.sequences, next->hparams, epochs, options_.finetune_seed, opts);
    {
      std::lock_guard writer(writer_mutex_);
      commit(next);
    }
    update([&](SteeringJob &j) {
      j.status = JobStatus::Done;
      j.checkpoint = options_.checkpoint_path;
    });
  } catch (const std::exception &e) {
    update([&](SteeringJob &j) {
      j.status = JobStatus::Failed;
      j.error = e.what();
    });
  }
  {
    std::lock_guard lock(jobs_mutex_);
    job_active_ = false;
  }
  jobs_cv_.notify_all();
}

HttpResponse SteeringService::get_job(const std::string &id) const {
  const auto j = job(id);
  if (!j)
    return error(404, "job " + id + " does not exist");
  return reply(200, job_json(*j));
}

std::pair<std::string, int> parse_bind_address(const std::string &text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw std::invalid_argument("bind address must look like host:port, got '" + text + "'");
  const std::string port_text = text.substr(colon + 1);
  if (port_text.find_first_not_of("0123456789") != std::string::npos || port_text.size() > 5)
    throw std::invalid_argument("bad port in bind address '" + text + "'");
  const int port = std::stoi(port_text);
  if (port > 65535)
    throw std::invalid_argument("bad port in bind address '" + text + "'");
  return {text.substr(0, colon), port};
}

std::pair<std::string, int> bind_address_from_env() {
  const char *env = std::getenv("PROTOSEQ_BIND");
  return parse_bind_address(env && *env ? env : "127.0.0.1:8080");
}

bool serve_http(SteeringService &service, const std::string &host, int port) {
  httplib::Server server;
  const auto bridge = [&service](const httplib::Request &req, httplib::Response &res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto &[k, v] : req.params)
      r.query.emplace(k, v);
    r.body = req.body;
    const HttpResponse out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(R"(/v1/.*)", bridge);
  server.Post(R"(/v1/.*)", bridge);
  return server.listen(host, port);
}

} // namespace protoseq
