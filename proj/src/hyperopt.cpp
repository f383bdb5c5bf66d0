#include "fgk/hyperopt.hpp"

#include "fgk/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fgk {

namespace {

std::vector<double> sorted_unique(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

} // namespace

void SearchSpace::validate() const
{
    for (const auto* g : {&lambda_T, &lambda_O, &state_bw_scale, &obs_bw_scale, &kappa}) {
        if (g->empty()) throw Error(Errc::EmptySpace, "hyperparameter grid is empty");
        for (double v : *g)
            if (!(v > 0) || !std::isfinite(v)) throw Error(Errc::BadConfig, "grid values must be positive");
    }
}

std::size_t SearchSpace::size() const
{
    return lambda_T.size() * lambda_O.size() * state_bw_scale.size() * obs_bw_scale.size() * kappa.size();
}

std::vector<FkkfHyperparams> SearchSpace::points() const
{
    validate();
    std::vector<FkkfHyperparams> out;
    for (double a : sorted_unique(lambda_T))
        for (double b : sorted_unique(lambda_O))
            for (double c : sorted_unique(state_bw_scale))
                for (double d : sorted_unique(obs_bw_scale))
                    for (double e : sorted_unique(kappa)) out.push_back({a, b, c, d, e});
    return out;
}

ErrorFn peak_error_fn(const ExperimentConfig& cfg, double w)
{
    return [cfg, w](const std::vector<FlowTrace>& fit, const FlowTrace& val, const FkkfHyperparams& hp) {
        SplitResult r = evaluate_split(fit, val, w, hp, cfg);
        if (r.excluded) return std::nan("");
        return std::abs(r.pred_error);
    };
}

SearchResult grid_search(const std::vector<FlowTrace>& train, const SearchSpace& space, const ErrorFn& error_fn,
                         const SearchOptions& opt)
{
    const auto pts = space.points();
    std::vector<std::pair<std::vector<FlowTrace>, FlowTrace>> folds;
    if (opt.validation == Validation::leave_one_out) {
        for (auto& s : leave_one_out_splits(train)) folds.emplace_back(std::move(s.train), std::move(s.test));
    } else {
        if (!(opt.holdout_fraction > 0 && opt.holdout_fraction < 1))
            throw Error(Errc::BadConfig, "holdout fraction must lie in (0, 1)");
        const std::size_t hold = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.holdout_fraction * static_cast<double>(train.size()))));
        if (train.size() < hold + 1) throw Error(Errc::InsufficientGroup, "not enough flows for a holdout split");
        std::vector<FlowTrace> fit(train.begin(), train.end() - static_cast<long>(hold));
        for (std::size_t i = train.size() - hold; i < train.size(); ++i) folds.emplace_back(fit, train[i]);
    }

    SearchResult res;
    res.candidates.resize(pts.size());
    for (std::size_t c = 0; c < pts.size(); ++c) {
        CandidateResult& cr = res.candidates[c];
        cr.hp = pts[c];
        double sum = 0;
        int used = 0;
        try {
            for (auto& [fit, val] : folds) {
                const double e = error_fn(fit, val, cr.hp);
                if (std::isnan(e)) continue;
                sum += e;
                ++used;
            }
            if (used > 0) {
                cr.error = sum / used;
                cr.viable = std::isfinite(cr.error);
            } else {
                cr.failure = "no usable validation flow";
            }
        } catch (const Error& e) {
            if (e.code() != Errc::NumericalFailure && e.code() != Errc::UndefinedError) throw;
            cr.failure = e.what();
        }
    }
    const CandidateResult* best = nullptr;
    for (auto& c : res.candidates)
        if (c.viable && (!best || c.error < best->error)) best = &c;
    if (!best) throw Error(Errc::NoViableCandidate, "every hyperparameter candidate failed");
    res.best = best->hp;
    res.error = best->error;
    return res;
}

std::string format_audit_log(const SearchResult& r)
{
    std::string out = "lambda_T,lambda_O,state_bw_scale,obs_bw_scale,kappa,error,status\n";
    for (auto& c : r.candidates)
        out += fmt::format("{},{},{},{},{},{},{}\n", fmt_num(c.hp.lambda_T), fmt_num(c.hp.lambda_O),
                           fmt_num(c.hp.state_bw_scale), fmt_num(c.hp.obs_bw_scale), fmt_num(c.hp.kappa),
                           c.viable ? fmt_num(c.error) : std::string(),
                           c.viable ? std::string("ok") : "failed: " + c.failure);
    return out;
}

HyperSource searched_hyper(const SearchSpace& space, const ExperimentConfig& cfg, const SearchOptions& opt)
{
    return [space, cfg, opt](const std::vector<FlowTrace>& train, double w) {
        return grid_search(train, space, peak_error_fn(cfg, w), opt).best;
    };
}

} // namespace fgk
