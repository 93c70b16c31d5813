#include "netfolio/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "csv.hpp"
#include "netfolio/error.hpp"
#include "netfolio/format.hpp"

namespace netfolio {

using detail::is_blank;
using detail::parse_double;
using detail::split_fields;

std::optional<std::size_t> PricePanel::ticker_index(std::string_view ticker) const {
  auto it = std::lower_bound(tickers.begin(), tickers.end(), ticker);
  if (it == tickers.end() || *it != ticker) return std::nullopt;
  return static_cast<std::size_t>(it - tickers.begin());
}

std::optional<std::size_t> PricePanel::date_index(const Date& date) const {
  auto it = std::lower_bound(dates.begin(), dates.end(), date);
  if (it == dates.end() || *it != date) return std::nullopt;
  return static_cast<std::size_t>(it - dates.begin());
}

std::size_t ReturnPanel::period_index(std::string_view label) const {
  for (std::size_t p = 0; p < periods.size(); ++p) {
    if (periods[p].label == label) return p;
  }
  throw InputError("unknown study period '" + std::string(label) + "'");
}

std::vector<double> ReturnPanel::period_total_returns(std::size_t period) const {
  auto row = total_return.row(period);
  return {row.begin(), row.end()};
}

void validate_panel(const PricePanel& panel) {
  if (panel.tickers.empty()) throw InputError("price panel has no tickers");
  if (panel.dates.size() < 2) throw InputError("price panel needs at least two dates");
  for (std::size_t i = 1; i < panel.tickers.size(); ++i) {
    if (!(panel.tickers[i - 1] < panel.tickers[i])) {
      throw InputError("tickers must be sorted and unique near '" + panel.tickers[i] + "'");
    }
  }
  for (std::size_t t = 1; t < panel.dates.size(); ++t) {
    if (!(panel.dates[t - 1] < panel.dates[t])) {
      throw InputError("dates must be strictly increasing at " + format_date(panel.dates[t]));
    }
  }
  if (panel.close.rows() != panel.dates.size() || panel.close.cols() != panel.tickers.size()) {
    throw InputError("price matrix shape does not match dates x tickers");
  }
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    for (std::size_t i = 0; i < panel.tickers.size(); ++i) {
      const double p = panel.close(t, i);
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw InputError("non-positive close price " + format_number(p) + " at (" +
                         format_date(panel.dates[t]) + ", " + panel.tickers[i] + ")");
      }
    }
  }
}

PricePanel parse_prices(std::istream& in, const std::string& source) {
  struct Row {
    Date date;
    std::string ticker;
    double close;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    auto fields = split_fields(line);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "date" || fields[1] != "ticker" || fields[2] != "close") {
        throw InputError(source + ":" + std::to_string(line_no) +
                         ": expected header 'date,ticker,close'");
      }
      header_seen = true;
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != 3 || fields[1].empty()) {
      throw InputError(where + "malformed row (expected date,ticker,close)");
    }
    Date date;
    try {
      date = parse_date(fields[0]);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    auto close = parse_double(fields[2]);
    if (!close) throw InputError(where + "malformed close price '" + std::string(fields[2]) + "'");
    if (!(*close > 0.0) || !std::isfinite(*close)) {
      throw InputError(where + "non-positive close price " + std::string(fields[2]) + " at (" +
                       std::string(fields[0]) + ", " + std::string(fields[1]) + ")");
    }
    rows.push_back({date, std::string(fields[1]), *close, line_no});
  }
  if (!header_seen) throw InputError(source + ": empty price file");

  std::set<std::string> ticker_set;
  std::set<Date> date_set;
  for (const auto& r : rows) {
    ticker_set.insert(r.ticker);
    date_set.insert(r.date);
  }
  PricePanel panel;
  panel.tickers.assign(ticker_set.begin(), ticker_set.end());
  panel.dates.assign(date_set.begin(), date_set.end());
  panel.close = Matrix(panel.dates.size(), panel.tickers.size(), 0.0);
  for (const auto& r : rows) {
    const auto t = *panel.date_index(r.date);
    const auto i = *panel.ticker_index(r.ticker);
    if (panel.close(t, i) != 0.0) {
      throw InputError(source + ":" + std::to_string(r.line) + ": duplicate price for (" +
                       format_date(r.date) + ", " + r.ticker + ")");
    }
    panel.close(t, i) = r.close;
  }
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    for (std::size_t i = 0; i < panel.tickers.size(); ++i) {
      if (panel.close(t, i) == 0.0) {
        throw InputError(source + ": missing price for (" + format_date(panel.dates[t]) + ", " +
                         panel.tickers[i] + ")");
      }
    }
  }
  validate_panel(panel);
  return panel;
}

DividendTable parse_dividends(std::istream& in, const PricePanel& panel, const std::string& source) {
  DividendTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    auto fields = split_fields(line);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "ticker" || fields[1] != "payment_date" ||
          fields[2] != "amount") {
        throw InputError(source + ":" + std::to_string(line_no) +
                         ": expected header 'ticker,payment_date,amount'");
      }
      header_seen = true;
      continue;
    }
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != 3 || fields[0].empty()) {
      throw InputError(where + "malformed row (expected ticker,payment_date,amount)");
    }
    Dividend div;
    div.ticker = std::string(fields[0]);
    if (!panel.ticker_index(div.ticker)) {
      throw InputError(where + "dividend for unknown ticker '" + div.ticker + "'");
    }
    try {
      div.payment_date = parse_date(fields[1]);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    if (div.payment_date < panel.dates.front() || panel.dates.back() < div.payment_date) {
      throw InputError(where + "dividend date " + format_date(div.payment_date) +
                       " outside the price panel range " + format_date(panel.dates.front()) +
                       ".." + format_date(panel.dates.back()));
    }
    auto amount = parse_double(fields[2]);
    if (!amount) throw InputError(where + "malformed dividend amount '" + std::string(fields[2]) + "'");
    if (!(*amount >= 0.0) || !std::isfinite(*amount)) {
      throw InputError(where + "negative dividend amount " + std::string(fields[2]));
    }
    div.amount = *amount;
    table.entries.push_back(std::move(div));
  }
  if (!header_seen) throw InputError(source + ": empty dividend file");
  return table;
}

MarketData ingest(const std::filesystem::path& price_file, const std::filesystem::path& dividend_file) {
  std::ifstream prices(price_file);
  if (!prices) throw InputError("cannot open price file '" + price_file.string() + "'");
  std::ifstream divs(dividend_file);
  if (!divs) throw InputError("cannot open dividend file '" + dividend_file.string() + "'");
  MarketData data;
  data.prices = parse_prices(prices, price_file.filename().string());
  data.dividends = parse_dividends(divs, data.prices, dividend_file.filename().string());
  return data;
}

std::size_t reinvestment_date_index(const PricePanel& panel, const Date& payment_date) {
  auto it = std::lower_bound(panel.dates.begin(), panel.dates.end(), payment_date);
  if (it == panel.dates.end()) {
    throw InputError("dividend date " + format_date(payment_date) + " is after the last close");
  }
  return static_cast<std::size_t>(it - panel.dates.begin());
}

std::vector<double> total_return_index(const PricePanel& panel, const DividendTable& divs,
                                       std::string_view ticker) {
  const auto col = panel.ticker_index(ticker);
  if (!col) throw InputError("unknown ticker '" + std::string(ticker) + "'");

  // Dividends per reinvestment date, in table order.
  std::vector<std::vector<double>> paid(panel.dates.size());
  for (const auto& d : divs.entries) {
    if (d.ticker != ticker) continue;
    paid[reinvestment_date_index(panel, d.payment_date)].push_back(d.amount);
  }

  std::vector<double> index(panel.dates.size());
  double shares = 1.0;
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    const double price = panel.close(t, *col);
    for (double amount : paid[t]) shares *= 1.0 + amount / price;
    index[t] = shares * price;
  }
  return index;
}

ReturnPanel period_returns(const PricePanel& panel, const DividendTable& divs,
                           const std::vector<StudyPeriod>& periods) {
  ReturnPanel out;
  out.tickers = panel.tickers;
  out.periods = periods;
  out.total_return = Matrix(periods.size(), panel.tickers.size());

  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  for (const auto& p : periods) {
    auto s = panel.date_index(p.start);
    auto e = panel.date_index(p.end);
    if (!s) throw InputError("period '" + p.label + "' start " + format_date(p.start) + " is not a panel date");
    if (!e) throw InputError("period '" + p.label + "' end " + format_date(p.end) + " is not a panel date");
    if (*s >= *e) throw InputError("period '" + p.label + "' must start before it ends");
    bounds.emplace_back(*s, *e);
    out.weekly_returns.emplace_back(*e - *s, panel.tickers.size());
  }

  for (std::size_t i = 0; i < panel.tickers.size(); ++i) {
    const auto tri = total_return_index(panel, divs, panel.tickers[i]);
    for (std::size_t p = 0; p < periods.size(); ++p) {
      const auto [s, e] = bounds[p];
      out.total_return(p, i) = 100.0 * (tri[e] / tri[s] - 1.0);
      for (std::size_t t = s; t < e; ++t) {
        out.weekly_returns[p](t - s, i) = tri[t + 1] / tri[t] - 1.0;
      }
    }
  }
  return out;
}

std::vector<StudyPeriod> parse_periods_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("periods: invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw InputError("periods: expected a JSON array of {label, start, end}");
  std::vector<StudyPeriod> periods;
  std::set<std::string> labels;
  for (std::size_t k = 0; k < doc.size(); ++k) {
    const auto& item = doc[k];
    const std::string where = "periods[" + std::to_string(k) + "]: ";
    if (!item.is_object() || !item.contains("label") || !item.contains("start") || !item.contains("end") ||
        !item["label"].is_string() || !item["start"].is_string() || !item["end"].is_string()) {
      throw InputError(where + "expected {\"label\", \"start\", \"end\"} strings");
    }
    StudyPeriod p;
    p.label = item["label"].get<std::string>();
    try {
      p.start = parse_date(item["start"].get<std::string>());
      p.end = parse_date(item["end"].get<std::string>());
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    if (!(p.start < p.end)) throw InputError(where + "start must precede end");
    if (!labels.insert(p.label).second) throw InputError(where + "duplicate label '" + p.label + "'");
    periods.push_back(std::move(p));
  }
  return periods;
}

std::vector<StudyPeriod> load_periods(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open periods file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_periods_json(buf.str());
}

namespace {

std::string synthetic_ticker(std::size_t block, std::size_t member, std::size_t blocks,
                             std::size_t max_members) {
  const int bw = blocks >= 10 ? 2 : 1;
  const int mw = max_members >= 100 ? 3 : 2;
  char buf[32];
  std::snprintf(buf, sizeof buf, "B%0*zuS%0*zu", bw, block + 1, mw, member + 1);
  return buf;
}

}  // namespace

std::vector<std::size_t> synthetic_blocks(const BlockFactorSpec& spec) {
  std::vector<std::size_t> blocks;
  for (std::size_t b = 0; b < spec.block_sizes.size(); ++b) {
    blocks.insert(blocks.end(), spec.block_sizes[b], b);
  }
  return blocks;
}

MarketData synthesize_panel(const BlockFactorSpec& spec, std::uint64_t seed) {
  const std::size_t nblocks = spec.block_sizes.size();
  if (nblocks == 0) throw InputError("synthesize_panel: at least one block is required");
  if (spec.block_loadings.size() != 1 && spec.block_loadings.size() != nblocks) {
    throw InputError("synthesize_panel: need one loading per block (or a single shared loading)");
  }
  if (!(spec.idiosyncratic_vol > 0.0)) throw InputError("synthesize_panel: idiosyncratic volatility must be positive");
  if (!(spec.weekly_vol > 0.0)) throw InputError("synthesize_panel: weekly volatility must be positive");
  if (spec.weeks < 2) throw InputError("synthesize_panel: need at least two weeks");
  if (!(spec.start_price > 0.0)) throw InputError("synthesize_panel: start price must be positive");
  if (spec.dividend_yield < 0.0) throw InputError("synthesize_panel: dividend yield must be non-negative");

  const auto blocks = synthetic_blocks(spec);
  const std::size_t n = blocks.size();
  if (n == 0) throw InputError("synthesize_panel: blocks are empty");
  std::vector<double> idio(n, spec.idiosyncratic_vol);
  for (const auto& [stock, vol] : spec.idiosyncratic_vol_overrides) {
    if (stock >= n) throw InputError("synthesize_panel: volatility override for unknown stock " + std::to_string(stock));
    if (!(vol > 0.0)) throw InputError("synthesize_panel: idiosyncratic volatility must be positive");
    idio[stock] = vol;
  }
  auto loading = [&](std::size_t b) {
    return spec.block_loadings.size() == 1 ? spec.block_loadings[0] : spec.block_loadings[b];
  };

  const std::size_t max_members = *std::max_element(spec.block_sizes.begin(), spec.block_sizes.end());
  std::vector<std::string> names;
  for (std::size_t b = 0; b < nblocks; ++b) {
    for (std::size_t j = 0; j < spec.block_sizes[b]; ++j) {
      names.push_back(synthetic_ticker(b, j, nblocks, max_members));
    }
  }

  MarketData data;
  auto& panel = data.prices;
  panel.tickers = names;  // already sorted by construction
  for (std::size_t t = 0; t <= spec.weeks; ++t) {
    panel.dates.push_back(add_days(spec.start, static_cast<int>(7 * t)));
  }
  panel.close = Matrix(spec.weeks + 1, n);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> log_price(n, std::log(spec.start_price));
  std::vector<double> factor(nblocks);
  for (std::size_t i = 0; i < n; ++i) panel.close(0, i) = spec.start_price;
  for (std::size_t t = 1; t <= spec.weeks; ++t) {
    const double market = normal(rng);
    for (auto& f : factor) f = normal(rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double shock = spec.market_loading * market + loading(blocks[i]) * factor[blocks[i]] +
                           idio[i] * normal(rng);
      log_price[i] += spec.weekly_drift + spec.weekly_vol * shock;
      panel.close(t, i) = std::exp(log_price[i]);
    }
  }

  if (spec.dividend_yield > 0.0) {
    for (std::size_t t = 13; t + 1 <= spec.weeks; t += 13) {
      const Date paid = add_days(panel.dates[t], 2);
      for (std::size_t i = 0; i < n; ++i) {
        data.dividends.entries.push_back({names[i], paid, panel.close(t, i) * spec.dividend_yield / 4.0});
      }
    }
  }
  validate_panel(panel);
  return data;
}

void write_prices_csv(std::ostream& out, const PricePanel& panel) {
  out << "date,ticker,close\n";
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    const auto date = format_date(panel.dates[t]);
    for (std::size_t i = 0; i < panel.tickers.size(); ++i) {
      out << date << ',' << panel.tickers[i] << ',' << format_number(panel.close(t, i), "%.17g") << '\n';
    }
  }
}

void write_dividends_csv(std::ostream& out, const DividendTable& divs) {
  out << "ticker,payment_date,amount\n";
  for (const auto& d : divs.entries) {
    out << d.ticker << ',' << format_date(d.payment_date) << ',' << format_number(d.amount, "%.17g") << '\n';
  }
}

}  // namespace netfolio
