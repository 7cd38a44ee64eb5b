#include "dinnlab/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "dinnlab/csv.hpp"
#include "dinnlab/error.hpp"

namespace dinnlab {

std::vector<std::string> Dataset::hidden() const {
    std::vector<std::string> h;
    for (std::size_t c = 0; c < compartments.size(); ++c)
        if (!mask[c]) h.push_back(compartments[c]);
    return h;
}

std::size_t Dataset::observed_count() const {
    std::size_t n = 0;
    for (std::size_t c = 0; c < dim(); ++c) {
        if (mask[c])
            n += size();
        else if (init_only[c] && size() > 0)
            n += 1;
    }
    return n;
}

void refresh_scale(Dataset& ds) {
    ds.scale.assign(ds.dim(), 0.0);
    for (std::size_t c = 0; c < ds.dim(); ++c) {
        const std::size_t rows = ds.mask[c] ? ds.size() : (ds.init_only[c] ? std::min<std::size_t>(1, ds.size()) : 0);
        for (std::size_t i = 0; i < rows; ++i) ds.scale[c] = std::max(ds.scale[c], std::abs(ds.observations[i][c]));
    }
}

Dataset from_trajectory(const Trajectory& traj) {
    Dataset ds;
    ds.model_name = traj.model_name;
    ds.compartments = traj.compartments;
    ds.times = traj.times;
    ds.observations = traj.states;
    ds.mask.assign(ds.compartments.size(), true);
    ds.init_only.assign(ds.compartments.size(), false);
    refresh_scale(ds);
    return ds;
}

Dataset synthesize(const CompartmentModel& model, std::span<const double> p_true, std::span<const double> y0,
                   std::size_t n_points, double horizon, const NoiseSpec& noise, const IntegratorConfig& cfg) {
    if (n_points < 2) throw Error(ErrorKind::Domain, "synthesize: need at least 2 points");
    if (!(noise.level >= 0.0)) throw Error(ErrorKind::Domain, "synthesize: noise level must be >= 0");
    if (!(horizon > 0.0)) throw Error(ErrorKind::Domain, "synthesize: horizon must be positive");
    const auto grid = uniform_grid(0.0, horizon, n_points);
    Dataset ds = from_trajectory(integrate(model, p_true, y0, grid, cfg));
    if (noise.level > 0.0) {
        std::mt19937_64 rng(noise.seed);
        std::normal_distribution<double> z(0.0, 1.0);
        std::vector<double> peak(ds.dim(), 0.0);
        for (const auto& row : ds.observations)
            for (std::size_t c = 0; c < ds.dim(); ++c) peak[c] = std::max(peak[c], std::abs(row[c]));
        for (auto& row : ds.observations) {
            for (std::size_t c = 0; c < ds.dim(); ++c) {
                const double draw = z(rng);
                double v = noise.model == NoiseModel::Multiplicative ? row[c] * (1.0 + noise.level * draw)
                                                                     : row[c] + noise.level * peak[c] * draw;
                row[c] = std::max(v, 0.0);
            }
        }
        refresh_scale(ds);
    }
    return ds;
}

Dataset mask_compartments(const Dataset& ds, const std::vector<std::string>& hidden) {
    Dataset out = ds;
    for (const auto& name : hidden) {
        auto it = std::find(out.compartments.begin(), out.compartments.end(), name);
        if (it == out.compartments.end())
            throw Error(ErrorKind::UnknownName, "mask_compartments: unknown compartment '" + name + "'");
        const auto c = static_cast<std::size_t>(it - out.compartments.begin());
        out.mask[c] = false;
        out.init_only[c] = true;
    }
    refresh_scale(out);
    return out;
}

namespace {

long parse_iso_day(const std::string& s, const std::string& where) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3)
        throw Error(ErrorKind::Ingestion, where + ": bad date '" + s + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw Error(ErrorKind::Ingestion, where + ": invalid date '" + s + "'");
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

double parse_count(const std::string& s, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
        throw Error(ErrorKind::Ingestion, where + ": bad count '" + s + "'");
    return v;
}

Dataset make_real(const std::vector<std::string>& comps) {
    Dataset ds;
    ds.model_name = "covid_sird";
    ds.compartments = comps;
    ds.mask.assign(comps.size(), true);
    ds.init_only.assign(comps.size(), false);
    return ds;
}

} // namespace

RealDataSplit ingest_real_csv(const std::string& path, int subsample_every, double train_cutoff) {
    if (subsample_every <= 0) throw Error(ErrorKind::Domain, "ingest_real_csv: subsample_every must be positive");
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Ingestion, "cannot open '" + path + "'");

    const std::vector<std::string> expected{"date", "S", "I", "D", "R"};
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<long> days;
    std::vector<std::vector<double>> rows;
    std::string first_date;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = csv::split(line);
        const std::string where = path + ":" + std::to_string(lineno);
        if (!have_header) {
            if (cells != expected) throw Error(ErrorKind::Ingestion, where + ": expected header date,S,I,D,R");
            have_header = true;
            continue;
        }
        if (cells.size() != expected.size()) throw Error(ErrorKind::Ingestion, where + ": expected 5 cells");
        const long day = parse_iso_day(cells[0], where);
        if (!days.empty() && day <= days.back())
            throw Error(ErrorKind::Ordering, where + ": dates must be strictly increasing");
        if (days.empty()) first_date = cells[0];
        days.push_back(day);
        rows.push_back({parse_count(cells[1], where), parse_count(cells[2], where), parse_count(cells[3], where),
                        parse_count(cells[4], where)});
    }
    if (!have_header) throw Error(ErrorKind::Ingestion, path + ": empty file");
    if (rows.size() < 2) throw Error(ErrorKind::Ingestion, path + ": need at least 2 data rows");

    const std::vector<std::string> comps{"S", "I", "D", "R"};
    RealDataSplit split{make_real(comps), make_real(comps), first_date};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const long t = days[i] - days.front();
        const auto td = static_cast<double>(t);
        if (td <= train_cutoff) {
            if (t % subsample_every == 0) {
                split.train.times.push_back(td);
                split.train.observations.push_back(rows[i]);
            }
        } else {
            split.holdout.times.push_back(td);
            split.holdout.observations.push_back(rows[i]);
        }
    }
    refresh_scale(split.train);
    refresh_scale(split.holdout);
    return split;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    Trajectory t;
    t.model_name = ds.model_name;
    t.compartments = ds.compartments;
    t.times = ds.times;
    t.states = ds.observations;
    write_csv(path, t);
}

nlohmann::json mask_sidecar(const Dataset& ds) {
    return {{"model", ds.model_name}, {"hidden", ds.hidden()}, {"scale", ds.scale}};
}

Dataset read_dataset_csv(const std::string& path, const std::string& model_name) {
    Trajectory t = read_trajectory_csv(path);
    t.model_name = model_name;
    for (std::size_t i = 1; i < t.times.size(); ++i)
        if (!(t.times[i] > t.times[i - 1]))
            throw Error(ErrorKind::Ordering, path + ": times must be strictly increasing");
    return from_trajectory(t);
}

Dataset apply_sidecar(const Dataset& ds, const nlohmann::json& sidecar) {
    std::vector<std::string> hidden;
    if (sidecar.contains("hidden")) hidden = sidecar.at("hidden").get<std::vector<std::string>>();
    return mask_compartments(ds, hidden);
}

} // namespace dinnlab
