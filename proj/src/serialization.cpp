#include <jpac/serialization.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace jpac {

using nlohmann::json;

namespace {

json flat(const Eigen::MatrixXd& m)
{
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(m(i, j));
    return arr;
}

Eigen::MatrixXd unflat(const json& arr, Eigen::Index rows, Eigen::Index cols)
{
    if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != rows * cols)
        throw std::invalid_argument("json: matrix has wrong number of entries");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = arr.at(static_cast<std::size_t>(i * cols + j)).get<double>();
    return m;
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd unvec(const json& arr)
{
    const auto values = arr.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json header(const char* kind) { return json{{"format", kFormatVersion}, {"kind", kind}}; }

void expect(const json& doc, const char* kind)
{
    if (doc.value("format", "") != kFormatVersion || doc.value("kind", "") != kind)
        throw std::invalid_argument(std::string("json: expected a ") + kFormatVersion + " '" + kind + "' document");
}

json kappa_json(double kappa) { return std::isinf(kappa) ? json("inf") : json(kappa); }

double kappa_from(const json& j)
{
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw std::invalid_argument("json: kappa must be a number or \"inf\"");
    }
    return j.get<double>();
}

json seed_json(const SeedRecord& s) { return json{{"seed", s.seed}, {"path", s.path}}; }

} // namespace

json to_json(const NetworkInstance& inst)
{
    json doc = header("instance");
    doc["K"] = inst.K;
    doc["gamma"] = vec(inst.gamma);
    doc["eta"] = vec(inst.eta);
    doc["pbar"] = vec(inst.pbar);
    doc["kappa"] = kappa_json(inst.kappa);
    doc["dist"] = flat(inst.dist);
    if (inst.tx_pos) {
        doc["tx_pos"] = flat(inst.tx_pos->transpose());
        doc["rx_pos"] = flat(inst.rx_pos->transpose());
    }
    return doc;
}

NetworkInstance instance_from_json(const json& doc)
{
    expect(doc, "instance");
    NetworkInstance inst;
    inst.K = doc.at("K").get<int>();
    inst.gamma = unvec(doc.at("gamma"));
    inst.eta = unvec(doc.at("eta"));
    inst.pbar = unvec(doc.at("pbar"));
    inst.kappa = kappa_from(doc.at("kappa"));
    inst.dist = unflat(doc.at("dist"), inst.K, inst.K);
    if (doc.contains("tx_pos")) {
        inst.tx_pos = Eigen::Matrix2Xd(unflat(doc.at("tx_pos"), inst.K, 2).transpose());
        inst.rx_pos = Eigen::Matrix2Xd(unflat(doc.at("rx_pos"), inst.K, 2).transpose());
    }
    inst.validate();
    return inst;
}

json to_json(const GainSampleSet& samples)
{
    json doc = header("gain_samples");
    doc["K"] = samples.K();
    doc["N"] = samples.N;
    doc["seed"] = seed_json(samples.seed);
    json gains = json::array();
    for (const auto& g : samples.gains) gains.push_back(flat(g));
    doc["gains"] = std::move(gains);
    return doc;
}

GainSampleSet samples_from_json(const json& doc)
{
    expect(doc, "gain_samples");
    GainSampleSet s;
    const int K = doc.at("K").get<int>();
    s.N = doc.at("N").get<int>();
    s.seed.seed = doc.at("seed").at("seed").get<std::uint64_t>();
    s.seed.path = doc.at("seed").at("path").get<std::vector<std::uint64_t>>();
    for (const auto& g : doc.at("gains")) s.gains.push_back(unflat(g, K, K));
    s.validate();
    return s;
}

json to_json(const NormalizedProblem& prob)
{
    json doc = header("normalized_problem");
    doc["K"] = prob.K;
    doc["N"] = prob.N;
    doc["links"] = prob.links;
    doc["alpha"] = prob.alpha;
    doc["mode"] = prob.mode == ResidualMode::one_sided ? "one_sided" : "two_sided";
    doc["pbar"] = vec(prob.pbar);
    doc["eta"] = vec(prob.eta);
    doc["c"] = flat(prob.c);
    json a = json::array();
    for (const auto& m : prob.a) a.push_back(flat(m));
    doc["a"] = std::move(a);
    return doc;
}

NormalizedProblem problem_from_json(const json& doc)
{
    expect(doc, "normalized_problem");
    NormalizedProblem prob;
    prob.K = doc.at("K").get<int>();
    prob.N = doc.at("N").get<int>();
    prob.links = doc.at("links").get<LinkSet>();
    prob.alpha = doc.at("alpha").get<double>();
    prob.mode = doc.at("mode").get<std::string>() == "two_sided" ? ResidualMode::two_sided : ResidualMode::one_sided;
    prob.pbar = unvec(doc.at("pbar"));
    prob.eta = unvec(doc.at("eta"));
    prob.c = unflat(doc.at("c"), prob.K, prob.N);
    for (const auto& m : doc.at("a")) prob.a.push_back(unflat(m, prob.K, prob.K));
    if (static_cast<int>(prob.a.size()) != prob.N) throw std::invalid_argument("json: problem has wrong sample count");
    return prob;
}

json to_json(const AdmissionOutcome& outcome)
{
    json doc = header("admission_outcome");
    doc["supported"] = outcome.supported;
    doc["readmitted"] = outcome.readmitted;
    json trace = json::array();
    for (const auto& r : outcome.removal_trace)
        trace.push_back({{"link", r.link}, {"score", r.score}, {"violation", r.violation}});
    doc["removal_trace"] = std::move(trace);
    doc["final_q"] = {{"rows", outcome.final_q.K()}, {"cols", outcome.final_q.N()}, {"data", flat(outcome.final_q.q)}};
    doc["solver_stats"] = {{"solves", outcome.solver_stats.solves},
                           {"total_iterations", outcome.solver_stats.total_iterations},
                           {"nonconverged", outcome.solver_stats.nonconverged}};
    if (!outcome.diagnostic.empty()) doc["diagnostic"] = outcome.diagnostic;
    return doc;
}

json to_json(const TwoTimescaleReport& report, bool with_records)
{
    json doc = header("two_timescale_report");
    doc["trials"] = report.trials;
    doc["outage_count"] = report.outage_count;
    doc["outage_ratio"] = report.outage_ratio;
    doc["avg_total_power"] = report.avg_total_power;
    doc["detector_disagreements"] = report.detector_disagreements;
    if (with_records) {
        json recs = json::array();
        for (const auto& r : report.records)
            recs.push_back({{"trial", r.trial}, {"outage", r.outage}, {"total_power", r.total_power},
                            {"fm_iterations", r.fm_iterations}});
        doc["records"] = std::move(recs);
    }
    return doc;
}

json read_json_file(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_json_file(const json& doc, const std::string& path)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << doc.dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed: " + path);
}

} // namespace jpac
