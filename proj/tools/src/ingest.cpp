#include "crvar/cli/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace crvar::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> diff(const std::vector<double>& x) {
  std::vector<double> out(x.size(), kNaN);
  for (std::size_t t = 1; t < x.size(); ++t) out[t] = x[t] - x[t - 1];
  return out;
}

std::vector<double> logs(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (std::isnan(x[t])) {
      out[t] = kNaN;
    } else if (x[t] <= 0.0) {
      throw DomainError("log transform of non-positive value " + format_double(x[t]));
    } else {
      out[t] = std::log(x[t]);
    }
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

std::vector<double> apply_tcode(const std::vector<double>& x, int tcode) {
  switch (tcode) {
    case 1: return x;
    case 2: return diff(x);
    case 3: return diff(diff(x));
    case 4: return logs(x);
    case 5: return diff(logs(x));
    case 6: return diff(diff(logs(x)));
    case 7: {
      std::vector<double> growth(x.size(), kNaN);
      for (std::size_t t = 1; t < x.size(); ++t) growth[t] = x[t] / x[t - 1] - 1.0;
      return diff(growth);
    }
    default:
      throw InputError("unknown transform code " + std::to_string(tcode));
  }
}

std::string normalize_date(const std::string& text) {
  int y = 0, m = 0, d = 0;
  std::string s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (s.size() == 10 && s[4] == '-' && s[7] == '-' && all_digits(s.substr(0, 4)) &&
      all_digits(s.substr(5, 2)) && all_digits(s.substr(8, 2))) {
    y = std::stoi(s.substr(0, 4));
    m = std::stoi(s.substr(5, 2));
    d = std::stoi(s.substr(8, 2));
  } else {
    const auto a = s.find('/');
    const auto b = a == std::string::npos ? a : s.find('/', a + 1);
    if (b == std::string::npos) return {};
    const std::string ms = s.substr(0, a), ds = s.substr(a + 1, b - a - 1), ys = s.substr(b + 1);
    if (!all_digits(ms) || !all_digits(ds) || !all_digits(ys) || ys.size() != 4) return {};
    y = std::stoi(ys);
    m = std::stoi(ms);
    d = std::stoi(ds);
  }
  if (m < 1 || m > 12 || d < 1 || d > 31) return {};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::vector<SeriesSpec> read_group_map(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const int cs = t.column("series"), cg = t.column("group"), ct = t.column("tcode");
  if (cs < 0 || cg < 0) throw InputError(path.string() + ": need columns series,group");
  std::vector<SeriesSpec> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    SeriesSpec s;
    s.name = t.rows[r][cs];
    s.group = t.rows[r][cg];
    if (ct >= 0 && !t.rows[r][ct].empty()) {
      if (!all_digits(t.rows[r][ct])) {
        throw InputError(path.string() + ": bad tcode '" + t.rows[r][ct] + "' for " + s.name);
      }
      s.tcode = std::stoi(t.rows[r][ct]);
    }
    if (s.name.empty() || s.group.empty()) {
      throw InputError(path.string() + ": empty series or group on row " + std::to_string(r + 2));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void PanelSpec::validate() const {
  if (series.empty()) throw InputError("panel: no series configured");
  for (const DateWindow* w : {&pre, &post}) {
    if (normalize_date(w->start).empty() || normalize_date(w->end).empty()) {
      throw InputError("panel: window dates must be ISO YYYY-MM-DD");
    }
    if (normalize_date(w->start) > normalize_date(w->end)) {
      throw InputError("panel: window start after end");
    }
  }
  if (!(normalize_date(pre.end) < normalize_date(post.start))) {
    throw InputError("panel: pre window must end before the post window starts");
  }
  if (min_length < 2) throw InputError("panel: min_length must be >= 2");
}

Panel read_panel(const std::filesystem::path& path, const std::string& date_column) {
  const CsvTable t = read_csv(path);
  const int dc = date_column.empty() ? 0 : t.column(date_column);
  if (dc < 0) throw InputError(path.string() + ": no date column '" + date_column + "'");
  Panel p;
  std::vector<int> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (static_cast<int>(c) == dc) continue;
    p.names.push_back(t.header[c]);
    cols.push_back(static_cast<int>(c));
  }
  p.values.assign(cols.size(), {});
  p.transform_row.assign(cols.size(), 0);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string tag = lower(row[dc]);
    const std::string where_row = path.string() + " row " + std::to_string(r + 2);
    if (tag == "transform") {
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const double v = parse_cell(row[cols[k]], where_row);
        if (!std::isnan(v)) p.transform_row[k] = static_cast<int>(v);
      }
      continue;
    }
    if (tag == "factors") continue;
    const std::string date = normalize_date(row[dc]);
    if (date.empty()) throw InputError(where_row + ": bad date '" + row[dc] + "'");
    if (!p.dates.empty() && !(p.dates.back() < date)) {
      throw InputError(where_row + ": dates must increase");
    }
    p.dates.push_back(date);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      p.values[k].push_back(parse_cell(row[cols[k]], where_row + " column " + p.names[k]));
    }
  }
  return p;
}

std::vector<GroupData> ingest(const PanelSpec& spec) {
  spec.validate();
  const Panel panel = read_panel(spec.csv_path, spec.date_column);
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < panel.names.size(); ++k) index[panel.names[k]] = k;

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  std::map<std::string, std::vector<std::vector<double>>> transformed;
  for (const SeriesSpec& s : spec.series) {
    const auto it = index.find(s.name);
    if (it == index.end()) throw InputError("panel: series '" + s.name + "' not in " + spec.csv_path.string());
    const int code = s.tcode != 0 ? s.tcode : panel.transform_row[it->second];
    if (code == 0) throw InputError("panel: no transform code for series '" + s.name + "'");
    std::vector<double> x;
    try {
      x = apply_tcode(panel.values[it->second], code);
    } catch (const Error& e) {
      throw InputError("series '" + s.name + "': " + e.what());
    }
    if (!members.count(s.group)) order.push_back(s.group);
    members[s.group].push_back(it->second);
    transformed[s.group].push_back(std::move(x));
  }

  const std::string pre_lo = normalize_date(spec.pre.start), pre_hi = normalize_date(spec.pre.end);
  const std::string post_lo = normalize_date(spec.post.start), post_hi = normalize_date(spec.post.end);

  std::vector<GroupData> out;
  for (const std::string& g : order) {
    GroupData gd;
    gd.group = g;
    for (std::size_t k : members[g]) gd.series.push_back(panel.names[k]);
    const auto& cols = transformed[g];
    const int d = static_cast<int>(cols.size());

    auto window_rows = [&](const std::string& lo, const std::string& hi,
                           const char* label) -> std::vector<std::size_t> {
      std::vector<std::size_t> rows;
      for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        if (panel.dates[t] >= lo && panel.dates[t] <= hi) rows.push_back(t);
      }
      auto complete = [&](std::size_t t) {
        return std::none_of(cols.begin(), cols.end(), [&](const auto& c) { return std::isnan(c[t]); });
      };
      std::size_t first = 0;
      while (first < rows.size() && !complete(rows[first])) ++first;
      rows.erase(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(first));
      for (std::size_t t : rows) {
        if (!complete(t)) {
          throw InputError(std::string(label) + " window has a missing value on " + panel.dates[t]);
        }
      }
      return rows;
    };

    try {
      std::vector<std::size_t> pre = window_rows(pre_lo, pre_hi, "pre");
      std::vector<std::size_t> post = window_rows(post_lo, post_hi, "post");
      if (spec.match_length) {
        const std::size_t n = std::min(pre.size(), post.size());
        pre.erase(pre.begin(), pre.end() - static_cast<std::ptrdiff_t>(n));
        post.resize(n);
      }
      for (const auto* rows : {&pre, &post}) {
        if (static_cast<int>(rows->size()) < spec.min_length) {
          throw InputError((rows == &pre ? std::string("pre") : std::string("post")) +
                           " window has " + std::to_string(rows->size()) +
                           " usable rows, need at least " + std::to_string(spec.min_length));
        }
      }
      auto build = [&](const std::vector<std::size_t>& rows, std::vector<std::string>& dates) {
        Sample s;
        s.X.resize(static_cast<Eigen::Index>(rows.size()), d);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          dates.push_back(panel.dates[rows[i]]);
          for (int j = 0; j < d; ++j) s.X(static_cast<Eigen::Index>(i), j) = cols[j][rows[i]];
        }
        s.X.rowwise() -= s.X.colwise().mean();
        return s;
      };
      gd.pre = build(pre, gd.pre_dates);
      gd.post = build(post, gd.post_dates);
    } catch (const InputError& e) {
      gd.error = e.what();
    }
    out.push_back(std::move(gd));
  }
  return out;
}

}  // namespace crvar::cli
