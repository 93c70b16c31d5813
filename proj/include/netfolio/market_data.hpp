#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netfolio/date.hpp"
#include "netfolio/matrix.hpp"

namespace netfolio {

/// Weekly closing prices, indexed (date, ticker). Tickers are sorted and
/// unique, dates strictly increasing, every cell present and positive.
struct PricePanel {
  std::vector<std::string> tickers;
  std::vector<Date> dates;
  Matrix close;  // dates.size() x tickers.size()

  std::optional<std::size_t> ticker_index(std::string_view ticker) const;
  std::optional<std::size_t> date_index(const Date& date) const;
};

struct Dividend {
  std::string ticker;
  Date payment_date;
  double amount = 0.0;  // per share
};

struct DividendTable {
  std::vector<Dividend> entries;
};

struct StudyPeriod {
  std::string label;
  Date start;
  Date end;
};

/// Dividend-reinvested returns per study period.
struct ReturnPanel {
  std::vector<std::string> tickers;
  std::vector<StudyPeriod> periods;
  Matrix total_return;                // periods x tickers, percent
  std::vector<Matrix> weekly_returns;  // per period: weeks x tickers, simple returns

  std::size_t period_index(std::string_view label) const;
  std::vector<double> period_total_returns(std::size_t period) const;
};

struct MarketData {
  PricePanel prices;
  DividendTable dividends;
};

// Ingestion. `source` names the stream in error messages.
PricePanel parse_prices(std::istream& in, const std::string& source = "prices");
DividendTable parse_dividends(std::istream& in, const PricePanel& panel,
                              const std::string& source = "dividends");
MarketData ingest(const std::filesystem::path& price_file,
                  const std::filesystem::path& dividend_file);

/// Throws InputError when the panel breaks one of its invariants.
void validate_panel(const PricePanel& panel);

/// Index of the panel date on which a dividend paid on `payment_date` is
/// reinvested: the first close on or after the payment date.
std::size_t reinvestment_date_index(const PricePanel& panel, const Date& payment_date);

/// Total-return index of one ticker over the whole panel. Shares start at 1
/// and are multiplied by (1 + D/P_t) on each reinvestment date.
std::vector<double> total_return_index(const PricePanel& panel, const DividendTable& divs,
                                       std::string_view ticker);

ReturnPanel period_returns(const PricePanel& panel, const DividendTable& divs,
                           const std::vector<StudyPeriod>& periods);

std::vector<StudyPeriod> parse_periods_json(std::string_view json_text);
std::vector<StudyPeriod> load_periods(const std::filesystem::path& path);

/// Block-factor model for synthetic panels. Weekly log return of stock i in
/// block b is  drift + weekly_vol * (market_loading*M_t + loading_b*F_bt + s_i*e_it)
/// with independent standard normal M, F, e.
struct BlockFactorSpec {
  std::vector<std::size_t> block_sizes;
  std::vector<double> block_loadings;  // one per block, or a single value for all
  double market_loading = 0.0;
  double idiosyncratic_vol = 1.0;
  std::map<std::size_t, double> idiosyncratic_vol_overrides;  // stock index -> s_i
  double weekly_vol = 0.02;
  double weekly_drift = 0.002;
  std::size_t weeks = 156;
  Date start{std::chrono::year{2001}, std::chrono::January, std::chrono::day{2}};
  double start_price = 50.0;
  double dividend_yield = 0.0;  // annual; paid every 13 weeks, two days after a close
};

MarketData synthesize_panel(const BlockFactorSpec& spec, std::uint64_t seed);

/// Planted block (0-based) of each synthesized ticker, in panel ticker order.
std::vector<std::size_t> synthetic_blocks(const BlockFactorSpec& spec);

void write_prices_csv(std::ostream& out, const PricePanel& panel);
void write_dividends_csv(std::ostream& out, const DividendTable& divs);

}  // namespace netfolio
