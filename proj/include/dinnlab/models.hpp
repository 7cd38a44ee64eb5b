#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dinnlab/autodiff.hpp"

namespace dinnlab {

// One model constant. Table parameters carry the published value and search
// range; constants the equations need but no table lists are `known` and
// flagged `from_table == false`.
struct ParamSpec {
    std::string name;
    double true_value = 0.0;
    double search_lo = 0.0;
    double search_hi = 0.0;
    bool known = false;
    bool from_table = true;
    // Published range does not contain the published value.
    bool range_flagged = false;
    std::string note;
};

template <class T>
using RhsFn = std::function<void(double t, std::span<const T> y, std::span<const T> p, std::span<T> dy)>;

struct CompartmentModel {
    std::string name;
    std::string title;
    std::vector<std::string> compartments;
    std::vector<ParamSpec> params;
    std::vector<double> default_y0;
    // Total population when the equations use a fixed N, otherwise 0.
    double population = 0.0;
    // Default experiment horizon in the model's time unit.
    double horizon = 0.0;
    // Sum of all compartments is conserved (at consistent states).
    bool closed = false;

    RhsFn<double> rhs;
    RhsFn<ad::Var> rhs_var;

    std::size_t dim() const noexcept { return compartments.size(); }
    std::size_t compartment_index(std::string_view c) const;
    std::size_t param_index(std::string_view p) const;
    std::vector<double> true_values() const;
    std::vector<std::string> param_names() const;
    std::vector<std::string> learnable_names() const;
};

// Pure derivative evaluation; throws NonFiniteInput on non-finite y or p.
std::vector<double> rhs_eval(const CompartmentModel& model, double t, std::span<const double> y,
                             std::span<const double> p);

const CompartmentModel& registry_get(std::string_view name);
const std::vector<std::string>& registry_names();

nlohmann::json to_json(const CompartmentModel& model);

} // namespace dinnlab
