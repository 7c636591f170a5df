#include "gapp/io.hpp"

#include <fstream>
#include <sstream>

namespace gapp {

namespace {

Json vec_to_json(const Vec& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vec vec_from_json(const Json& a) {
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

Json scene_to_json(const SceneConfig& s) {
    Json j;
    j["step"] = s.step;
    j["dims"] = s.dims();
    Json bounds = Json::array();
    for (const auto& [lo, hi] : s.bounds) bounds.push_back(Json::array({lo, hi}));
    j["bounds"] = bounds;
    j["horizon"] = s.horizon;
    return j;
}

SceneConfig scene_from_json(const Json& j) {
    SceneConfig s;
    s.step = j.at("step").get<double>();
    for (const auto& b : j.at("bounds")) s.bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
    s.horizon = j.at("horizon").get<int>();
    return s;
}

Json gen_params_to_json(const GenParams& p) {
    Json j;
    j["clutter_rate"] = p.clutter_rate;
    j["birth_rate"] = p.birth_rate;
    j["noise_var"] = p.noise_var;
    j["survival_prob"] = p.survival_prob;
    j["class_prior"] = p.class_prior;
    Json classes = Json::array();
    for (const auto& c : p.class_params) {
        Json cj;
        cj["sigma2"] = c.sigma2;
        cj["ell"] = c.ell;
        cj["window"] = c.window;
        classes.push_back(cj);
    }
    j["classes"] = classes;
    j["detection_rate_range"] = Json::array({p.detection_rate_range.first, p.detection_rate_range.second});
    j["forced_initial_object"] = p.forced_initial_object;
    j["no_birth_tail"] = p.no_birth_tail;
    return j;
}

GenParams gen_params_from_json(const Json& j, double step) {
    GenParams p;
    p.clutter_rate = j.at("clutter_rate").get<double>();
    p.birth_rate = j.at("birth_rate").get<double>();
    p.noise_var = j.at("noise_var").get<double>();
    p.survival_prob = j.at("survival_prob").get<double>();
    p.class_prior = j.at("class_prior").get<std::vector<double>>();
    p.class_params.clear();
    for (const auto& cj : j.at("classes"))
        p.class_params.push_back(IseClassParams{cj.at("sigma2").get<double>(), cj.at("ell").get<double>(),
                                                cj.at("window").get<int>(), step});
    p.detection_rate_range = {j.at("detection_rate_range")[0].get<double>(),
                              j.at("detection_rate_range")[1].get<double>()};
    p.forced_initial_object = j.at("forced_initial_object").get<bool>();
    p.no_birth_tail = j.at("no_birth_tail").get<int>();
    return p;
}

}  // namespace

Json dataset_to_json(const ScenarioDataset& ds) {
    Json j;
    Json meta = scene_to_json(ds.scene);
    meta["seed"] = ds.seed;
    j["meta"] = meta;

    Json truth;
    if (ds.has_true_params) truth["params"] = gen_params_to_json(ds.true_params);
    Json objects = Json::array();
    for (const TrueObject& o : ds.objects) {
        Json oj;
        oj["id"] = o.id;
        oj["birth"] = o.birth_step;
        if (o.death_step)
            oj["death"] = *o.death_step;
        else
            oj["death"] = nullptr;
        oj["class"] = o.class_label;
        oj["rate"] = o.detection_rate;
        Json pos = Json::array();
        for (const Vec& p : o.positions) pos.push_back(vec_to_json(p));
        oj["positions"] = pos;
        objects.push_back(oj);
    }
    truth["objects"] = objects;
    j["truth"] = truth;

    Json frames = Json::array();
    for (const Frame& f : ds.frames) {
        Json fj;
        fj["k"] = f.step;
        Json obs = Json::array();
        for (const Vec& y : f.observations) obs.push_back(vec_to_json(y));
        fj["obs"] = obs;
        frames.push_back(fj);
    }
    j["frames"] = frames;
    return j;
}

ScenarioDataset dataset_from_json(const Json& j) {
    ScenarioDataset ds;
    ds.scene = scene_from_json(j.at("meta"));
    ds.seed = j.at("meta").value("seed", std::uint64_t{0});
    if (j.contains("truth") && j.at("truth").contains("params")) {
        ds.true_params = gen_params_from_json(j.at("truth").at("params"), ds.scene.step);
    } else {
        ds.has_true_params = false;
    }
    if (!j.contains("truth") || !j.at("truth").contains("objects")) {
        for (const auto& fj : j.at("frames")) {
            Frame f;
            f.step = fj.at("k").get<int>();
            for (const auto& y : fj.at("obs")) f.observations.push_back(vec_from_json(y));
            ds.frames.push_back(std::move(f));
        }
        return ds;
    }
    for (const auto& oj : j.at("truth").at("objects")) {
        TrueObject o;
        o.id = oj.at("id").get<int>();
        o.birth_step = oj.at("birth").get<int>();
        if (!oj.at("death").is_null()) o.death_step = oj.at("death").get<int>();
        o.class_label = oj.at("class").get<int>();
        o.detection_rate = oj.at("rate").get<double>();
        for (const auto& p : oj.at("positions")) o.positions.push_back(vec_from_json(p));
        ds.objects.push_back(std::move(o));
    }
    for (const auto& fj : j.at("frames")) {
        Frame f;
        f.step = fj.at("k").get<int>();
        for (const auto& y : fj.at("obs")) f.observations.push_back(vec_from_json(y));
        ds.frames.push_back(std::move(f));
    }
    return ds;
}

TrackingInput tracking_input_from_json(const Json& j) {
    TrackingInput in;
    in.scene = scene_from_json(j.at("meta"));
    for (const auto& fj : j.at("frames")) {
        Frame f;
        f.step = fj.at("k").get<int>();
        for (const auto& y : fj.at("obs")) f.observations.push_back(vec_from_json(y));
        in.frames.push_back(std::move(f));
    }
    return in;
}

RunConfig synthetic_preset() {
    RunConfig c;
    c.tracker = "gapp-reaction";
    c.filter.particles = 50;
    c.filter.class_params = {IseClassParams{100.0, 4.0, 10, 1.0}, IseClassParams{10.0, 1.0, 10, 1.0}};
    c.filter.class_prior = {0.5, 0.5};
    c.filter.clutter_baseline = GammaPosterior{9.0, 0.75};
    c.filter.rate_baseline = GammaPosterior{4.0, 1.0};
    c.filter.birth_baseline = GammaPosterior{0.05, 1.0};
    c.filter.noise_baseline = InvGammaPosterior{3.0, 2.0};
    c.filter.survival_prob = 0.98;
    c.filter.deletion = DeletionHeuristics{50.0, 3, 0.5, 0.1};
    c.filter.revival = RevivalConfig{3, false};
    c.gospa = GospaConfig{2.0, 10.0, 2.0};
    // wide enough that trajectories from the (100, 4) class stay in view
    c.scene.bounds = {{0.0, 1000.0}, {0.0, 1000.0}};
    c.scene.step = 1.0;
    c.scene.horizon = 100;
    c.sample_params_per_seed = true;
    return c;
}

RunConfig radar_preset() {
    RunConfig c = synthetic_preset();
    c.filter.particles = 100;
    c.filter.class_params = {IseClassParams{40.0, 2.0, 10, 2.22}, IseClassParams{100.0, 8.0, 10, 2.22}};
    c.filter.clutter_baseline = GammaPosterior{10.0, 1.0};
    c.filter.rate_baseline = GammaPosterior{50.0, 10.0};
    c.filter.birth_baseline = GammaPosterior{0.01, 1.0};
    c.filter.noise_baseline = InvGammaPosterior{1600.0, 64000.0};
    c.filter.deletion.max_pos_std = 1000.0;
    c.scene.step = 2.22;
    c.sample_params_per_seed = false;
    return c;
}

RunConfig run_config_from_json(const Json& j) {
    RunConfig c;
    const std::string preset = j.value("preset", std::string("synthetic"));
    if (preset == "synthetic")
        c = synthetic_preset();
    else if (preset == "radar")
        c = radar_preset();
    else
        throw std::invalid_argument("unknown preset: " + preset);

    if (j.contains("tracker")) c.tracker = j.at("tracker").get<std::string>();
    if (c.tracker != "gapp-class" && c.tracker != "gapp-reaction")
        throw std::invalid_argument("unknown tracker: " + c.tracker);
    if (j.contains("particles")) c.filter.particles = j.at("particles").get<int>();
    if (j.contains("seed")) c.filter.master_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("scene")) c.scene = scene_from_json(j.at("scene"));
    if (j.contains("classes")) {
        c.filter.class_params.clear();
        for (const auto& cj : j.at("classes"))
            c.filter.class_params.push_back(IseClassParams{cj.at("sigma2").get<double>(),
                                                           cj.at("ell").get<double>(),
                                                           cj.at("window").get<int>(), c.scene.step});
    }
    if (j.contains("class_prior")) c.filter.class_prior = j.at("class_prior").get<std::vector<double>>();
    if (j.contains("priors")) {
        const Json& p = j.at("priors");
        auto gamma2 = [&](const char* name, GammaPosterior& g) {
            if (p.contains(name)) {
                g.shape = p.at(name)[0].get<double>();
                g.rate = p.at(name)[1].get<double>();
            }
        };
        gamma2("clutter", c.filter.clutter_baseline);
        gamma2("rate", c.filter.rate_baseline);
        gamma2("birth", c.filter.birth_baseline);
        if (p.contains("noise")) {
            c.filter.noise_baseline.shape = p.at("noise")[0].get<double>();
            c.filter.noise_baseline.scale = p.at("noise")[1].get<double>();
        }
    }
    if (j.contains("survival_prob")) c.filter.survival_prob = j.at("survival_prob").get<double>();
    if (j.contains("deletion")) {
        const Json& d = j.at("deletion");
        c.filter.deletion.max_pos_std = d.value("max_pos_std", c.filter.deletion.max_pos_std);
        c.filter.deletion.max_miss_streak = d.value("max_miss_streak", c.filter.deletion.max_miss_streak);
        c.filter.deletion.min_expected_rate = d.value("min_expected_rate", c.filter.deletion.min_expected_rate);
        c.filter.deletion.scene_margin_frac = d.value("scene_margin_frac", c.filter.deletion.scene_margin_frac);
    }
    if (j.contains("revival")) {
        const Json& r = j.at("revival");
        c.filter.revival.d_zeta = r.value("d_zeta", c.filter.revival.d_zeta);
        c.filter.revival.allow_resplit_of_revived =
            r.value("allow_resplit_of_revived", c.filter.revival.allow_resplit_of_revived);
    }
    if (j.contains("forgetting")) {
        const Json& f = j.at("forgetting");
        c.filter.forgetting.lambda_gamma = f.value("lambda_gamma", 1.0);
        c.filter.forgetting.lambda_mu = f.value("lambda_mu", 1.0);
        c.filter.forgetting.lambda_s2 = f.value("lambda_s2", 1.0);
    }
    if (j.contains("ess_threshold")) c.filter.ess_threshold = j.at("ess_threshold").get<double>();
    if (j.contains("merge_radius_scale"))
        c.filter.merge_radius_scale = j.at("merge_radius_scale").get<double>();
    if (j.contains("existence_threshold"))
        c.filter.existence_threshold = j.at("existence_threshold").get<double>();
    if (j.contains("gospa")) {
        const Json& g = j.at("gospa");
        c.gospa.order = g.value("order", c.gospa.order);
        c.gospa.cutoff = g.value("cutoff", c.gospa.cutoff);
        c.gospa.normalizer = g.value("normalizer", c.gospa.normalizer);
    }
    if (j.contains("gen")) c.gen = gen_params_from_json(j.at("gen"), c.scene.step);
    if (j.contains("sample_params_per_seed"))
        c.sample_params_per_seed = j.at("sample_params_per_seed").get<bool>();
    c.filter.revival_enabled = (c.tracker == "gapp-reaction");
    c.filter.validate();
    c.gospa.validate();
    return c;
}

std::string key_to_string(std::uint64_t key) {
    const auto step = static_cast<std::uint32_t>(key >> 20);
    const auto cluster = static_cast<std::uint32_t>(key & 0xfffff);
    std::ostringstream os;
    os << step << ":" << cluster;
    return os.str();
}

namespace {

Json estimate_to_json(const TrackEstimate& e) {
    Json j;
    j["key"] = e.key;
    j["mean"] = vec_to_json(e.mean);
    j["std"] = e.pos_std;
    j["exist"] = e.existence;
    j["pi"] = e.class_probs;
    return j;
}

TrackEstimate estimate_from_json(const Json& j) {
    TrackEstimate e;
    e.key = j.at("key").get<std::uint64_t>();
    e.mean = vec_from_json(j.at("mean"));
    e.pos_std = j.at("std").get<double>();
    e.existence = j.at("exist").get<double>();
    e.class_probs = j.at("pi").get<std::vector<double>>();
    return e;
}

}  // namespace

void write_results(const std::string& path, const TrackingResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_results: cannot open " + path);

    Json header;
    header["type"] = "header";
    header["tracker"] = result.tracker;
    header["particles"] = result.particles;
    header["seed"] = result.seed;
    header["dims"] = result.dims;
    header["existence_threshold"] = result.existence_threshold;
    header["gate"] = result.gate;
    out << header.dump() << "\n";

    for (const StepRecord& rec : result.steps) {
        Json j;
        j["type"] = "step";
        j["k"] = rec.k;
        Json est = Json::array();
        for (const TrackEstimate& e : rec.estimates) est.push_back(estimate_to_json(e));
        j["est"] = est;
        Json parts = Json::array();
        for (const ParticleRec& pr : rec.particles) {
            Json pj;
            pj["w"] = pr.w;
            Json tracks = Json::array();
            for (const ParticleTrackRec& tr : pr.tracks) {
                Json tj;
                tj["key"] = tr.key;
                tj["pos"] = vec_to_json(tr.pos);
                tj["a"] = tr.alpha;
                tj["b"] = tr.beta;
                tj["pi"] = tr.class_probs;
                tracks.push_back(tj);
            }
            pj["tr"] = tracks;
            parts.push_back(pj);
        }
        j["parts"] = parts;
        Json hyp = Json::array();
        for (const HyperSample& h : rec.hyper)
            hyp.push_back(Json::array({h.w, h.eps, h.xi, h.alpha0, h.beta0, h.phi, h.b}));
        j["hyp"] = hyp;
        Json rev = Json::array();
        for (const RevivalEvent& ev : rec.revivals) {
            Json rj;
            rj["consumed"] = ev.consumed_key;
            rj["revived"] = ev.revived_key;
            rj["split"] = ev.split;
            rev.push_back(rj);
        }
        j["rev"] = rev;
        out << j.dump() << "\n";
    }

    Json footer;
    footer["type"] = "summary";
    footer["steps"] = static_cast<int>(result.steps.size());
    footer["wall_ms"] = result.wall_ms;
    out << footer.dump() << "\n";
}

TrackingResult read_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_results: cannot open " + path);
    TrackingResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const Json j = Json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "header") {
            result.tracker = j.at("tracker").get<std::string>();
            result.particles = j.at("particles").get<int>();
            result.seed = j.at("seed").get<std::uint64_t>();
            result.dims = j.at("dims").get<int>();
            result.existence_threshold = j.at("existence_threshold").get<double>();
            result.gate = j.at("gate").get<double>();
        } else if (type == "step") {
            StepRecord rec;
            rec.k = j.at("k").get<int>();
            for (const auto& ej : j.at("est")) rec.estimates.push_back(estimate_from_json(ej));
            for (const auto& pj : j.at("parts")) {
                ParticleRec pr;
                pr.w = pj.at("w").get<double>();
                for (const auto& tj : pj.at("tr")) {
                    ParticleTrackRec tr;
                    tr.key = tj.at("key").get<std::uint64_t>();
                    tr.pos = vec_from_json(tj.at("pos"));
                    tr.alpha = tj.at("a").get<double>();
                    tr.beta = tj.at("b").get<double>();
                    tr.class_probs = tj.at("pi").get<std::vector<double>>();
                    pr.tracks.push_back(std::move(tr));
                }
                rec.particles.push_back(std::move(pr));
            }
            for (const auto& hj : j.at("hyp")) {
                HyperSample h;
                h.w = hj[0].get<double>();
                h.eps = hj[1].get<double>();
                h.xi = hj[2].get<double>();
                h.alpha0 = hj[3].get<double>();
                h.beta0 = hj[4].get<double>();
                h.phi = hj[5].get<double>();
                h.b = hj[6].get<double>();
                rec.hyper.push_back(h);
            }
            for (const auto& rj : j.at("rev")) {
                RevivalEvent ev;
                ev.step = rec.k;
                ev.consumed_key = rj.at("consumed").get<std::uint64_t>();
                ev.revived_key = rj.at("revived").get<std::uint64_t>();
                ev.split = rj.at("split").get<bool>();
                rec.revivals.push_back(ev);
            }
            result.steps.push_back(std::move(rec));
        } else if (type == "summary") {
            result.wall_ms = j.at("wall_ms").get<double>();
        }
    }
    return result;
}

}  // namespace gapp
