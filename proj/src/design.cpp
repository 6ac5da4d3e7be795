#include "ssanova/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ssanova {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        out.push_back("");
    return out;
}

double parse_cell(const std::string& cell, long row, const std::string& column) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("non-numeric cell in column '" + column + "', data row " +
                         std::to_string(row));
    if (!std::isfinite(value))
        throw DataError("non-finite value in column '" + column + "', data row " +
                        std::to_string(row));
    return value;
}

// Kolmogorov-Smirnov distance of a sample in [0,1] from the uniform law.
double ks_uniform_distance(Eigen::VectorXd col) {
    std::sort(col.data(), col.data() + col.size());
    const double n = static_cast<double>(col.size());
    double d = 0.0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        d = std::max(d, (i + 1.0) / n - col[i]);
        d = std::max(d, col[i] - i / n);
    }
    return d;
}

} // namespace

double Dataset::unscale(int column, double x01) const {
    const auto& s = scaling.at(static_cast<size_t>(column));
    return s.min + x01 * (s.max - s.min);
}

double Dataset::scale_value(int column, double raw) const {
    const auto& s = scaling.at(static_cast<size_t>(column));
    return (raw - s.min) / (s.max - s.min);
}

Dataset Dataset::from_matrix(Eigen::MatrixXd X, Eigen::VectorXd y) {
    if (X.rows() != y.size())
        throw ArgumentError("covariate and response sizes differ");
    if (X.rows() < 2)
        throw DataError("need at least 2 observations");
    if (!X.allFinite() || !y.allFinite())
        throw DataError("non-finite values in data");
    if ((X.array() < 0.0).any() || (X.array() > 1.0).any())
        throw DataError("covariates must lie in [0,1]");
    Dataset d;
    d.covariates = std::move(X);
    d.response = std::move(y);
    d.scaling.assign(static_cast<size_t>(d.covariates.cols()), ColumnScale{0.0, 1.0});
    for (int j = 0; j < d.dim(); ++j)
        d.covariate_names.push_back("x" + std::to_string(j + 1));
    d.response_name = "y";
    return d;
}

Dataset load_csv(const std::string& path, const std::string& response_column,
                 const std::vector<std::string>& covariate_columns) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line))
        throw SchemaError("empty file: " + path);
    const auto header = split_line(line);

    auto find_col = [&](const std::string& name) -> size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw SchemaError("column '" + name + "' not found in " + path);
        return static_cast<size_t>(it - header.begin());
    };

    const size_t yidx = find_col(response_column);
    std::vector<size_t> xidx;
    for (const auto& name : covariate_columns)
        xidx.push_back(find_col(name));

    std::vector<double> yvals;
    std::vector<std::vector<double>> xvals(xidx.size());
    long dropped = 0;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw ParseError("data row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        bool missing = cells[yidx].empty();
        for (size_t k = 0; k < xidx.size() && !missing; ++k)
            missing = cells[xidx[k]].empty();
        if (missing) { // missing cells: drop the row, never impute
            ++dropped;
            continue;
        }
        yvals.push_back(parse_cell(cells[yidx], row, response_column));
        for (size_t k = 0; k < xidx.size(); ++k)
            xvals[k].push_back(parse_cell(cells[xidx[k]], row, covariate_columns[k]));
    }

    const long n = static_cast<long>(yvals.size());
    if (n < 2)
        throw DataError("need at least 2 usable data rows, found " + std::to_string(n));

    Dataset d;
    d.response = Eigen::Map<Eigen::VectorXd>(yvals.data(), n);
    d.covariates.resize(n, static_cast<Eigen::Index>(xidx.size()));
    d.scaling.resize(xidx.size());
    for (size_t k = 0; k < xidx.size(); ++k) {
        const auto [mn, mx] = std::minmax_element(xvals[k].begin(), xvals[k].end());
        if (*mx <= *mn)
            throw DataError("constant covariate column '" + covariate_columns[k] + "'");
        d.scaling[k] = ColumnScale{*mn, *mx};
        for (long i = 0; i < n; ++i)
            d.covariates(i, static_cast<Eigen::Index>(k)) = (xvals[k][static_cast<size_t>(i)] - *mn) / (*mx - *mn);
    }
    d.covariate_names = covariate_columns;
    d.response_name = response_column;
    d.dropped_rows = dropped;
    if (dropped > 0)
        d.warnings.push_back("dropped " + std::to_string(dropped) + " row(s) with missing cells");
    for (size_t k = 0; k < xidx.size(); ++k) {
        const double ks = ks_uniform_distance(d.covariates.col(static_cast<Eigen::Index>(k)));
        if (ks > 0.2)
            d.warnings.push_back("covariate '" + covariate_columns[k] +
                                 "' deviates from uniform (KS distance " + std::to_string(ks) +
                                 " > 0.2); interval/test calibration assumes near-uniform covariates");
    }
    return d;
}

std::vector<std::vector<int>> ModelSpec::penalized_effects() const {
    std::vector<std::vector<int>> out;
    for (const auto& s : effects)
        if (!s.empty()) out.push_back(s);
    return out;
}

ModelSpec validate_spec(const ModelSpec& spec, const Dataset& data) {
    ModelSpec out = spec;
    if (out.d == 0)
        out.d = data.dim();
    if (out.d != data.dim())
        throw SpecError("spec dimension d=" + std::to_string(out.d) + " does not match data (" +
                        std::to_string(data.dim()) + " covariates)");
    if (out.m < 2 || out.m > 6)
        throw SpecError("smoothness order m must lie in [2, 6]");
    if (!(out.gcv_gamma > 1.0))
        throw SpecError("gcv_gamma must exceed 1");
    if (!(out.alpha > 0.0 && out.alpha < 1.0))
        throw SpecError("alpha must lie in (0, 1)");

    bool has_intercept = false;
    std::set<std::vector<int>> seen;
    for (auto& s : out.effects) {
        std::sort(s.begin(), s.end());
        if (s.empty()) {
            has_intercept = true;
        } else {
            if (std::adjacent_find(s.begin(), s.end()) != s.end())
                throw SpecError("effect {" + effect_label(s) + "} repeats an index");
            if (s.front() < 1 || s.back() > out.d)
                throw SpecError("effect " + effect_label(s) + " references a covariate outside 1.." +
                                std::to_string(out.d));
        }
        if (!seen.insert(s).second)
            throw SpecError("duplicate effect " + (s.empty() ? "{}" : effect_label(s)));
    }
    if (!has_intercept)
        throw SpecError("effect collection must contain the intercept (empty set)");

    std::sort(out.effects.begin(), out.effects.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) {
                  if (a.size() != b.size()) return a.size() < b.size();
                  return a < b;
              });

    if (out.lambda.kind == LambdaPolicy::Kind::Fixed && !(out.lambda.fixed_value > 0.0))
        throw SpecError("fixed lambda must be positive");
    if (out.lambda.kind == LambdaPolicy::Kind::GcvGrid && !out.lambda.grid.empty()) {
        for (double v : out.lambda.grid)
            if (!(v > 0.0))
                throw SpecError("lambda grid values must be positive");
        if (!std::is_sorted(out.lambda.grid.begin(), out.lambda.grid.end()))
            throw SpecError("lambda grid must be sorted ascending");
    }
    return out;
}

std::vector<double> default_lambda_grid(int n, int m, int points) {
    if (n < 1 || points < 1)
        throw ArgumentError("default_lambda_grid needs n >= 1 and points >= 1");
    const double anchor = std::pow(static_cast<double>(n), -2.0 * m / (2.0 * m + 1.0));
    const double lo = 1e-8 * anchor, hi = 1e2 * anchor;
    std::vector<double> grid(static_cast<size_t>(points));
    if (points == 1) {
        grid[0] = std::sqrt(lo * hi);
        return grid;
    }
    const double step = (std::log(hi) - std::log(lo)) / (points - 1);
    for (int i = 0; i < points; ++i)
        grid[static_cast<size_t>(i)] = std::exp(std::log(lo) + step * i);
    return grid;
}

std::vector<std::vector<int>> effects_up_to_order(int d, int max_order) {
    std::vector<std::vector<int>> out{{}};
    const int total = 1 << d;
    for (int mask = 1; mask < total; ++mask) {
        std::vector<int> s;
        for (int j = 0; j < d; ++j)
            if (mask & (1 << j)) s.push_back(j + 1);
        if (static_cast<int>(s.size()) <= max_order)
            out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

std::string effect_label(const std::vector<int>& effect) {
    if (effect.empty()) return "intercept";
    std::string s;
    for (int j : effect)
        s += "x" + std::to_string(j);
    return s;
}

std::vector<std::vector<int>> parse_effect_list(const std::string& text) {
    std::vector<std::vector<int>> out{{}};
    std::stringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        group = trim(group);
        if (group.empty()) continue;
        std::vector<int> s;
        std::stringstream items(group);
        std::string item;
        while (std::getline(items, item, ',')) {
            item = trim(item);
            int idx = 0;
            const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), idx);
            if (ec != std::errc() || ptr != item.data() + item.size() || idx < 1)
                throw ArgumentError("bad effect index '" + item + "' in effect list");
            s.push_back(idx);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace ssanova
