#include "landtsir/epi.hpp"
#include "landtsir/error.hpp"

#include <algorithm>
#include <cmath>

namespace landtsir::epi {

std::size_t biweek_count(Date start, Date end)
{
    if (end < start) {
        throw UsageError("end date " + io::format_date(end) + " precedes start date " + io::format_date(start));
    }
    return static_cast<std::size_t>((io::days_between(start, end) + 1) / biweek_days);
}

const std::vector<double>& BinnedCases::series(const std::string& unit_id) const
{
    const auto it = std::find(unit_ids.begin(), unit_ids.end(), unit_id);
    if (it == unit_ids.end()) {
        throw DataError("no case series for unit '" + unit_id + "'");
    }
    return counts[static_cast<std::size_t>(it - unit_ids.begin())];
}

BinnedCases bin_cases(std::span<const CaseEvent> events, std::span<const std::string> unit_ids, Date start,
                      Date end)
{
    BinnedCases out;
    out.n_biweeks = biweek_count(start, end);
    out.unit_ids.assign(unit_ids.begin(), unit_ids.end());
    out.counts.assign(unit_ids.size(), std::vector<double>(out.n_biweeks, 0.0));

    for (const auto& ev : events) {
        const auto it = std::find(unit_ids.begin(), unit_ids.end(), ev.unit_id);
        if (it == unit_ids.end()) {
            throw DataError("case event for unknown unit '" + ev.unit_id + "'");
        }
        if (ev.date < start || ev.date > end) {
            throw DataError("case event on " + io::format_date(ev.date) + " is outside " + io::format_date(start) +
                            ".." + io::format_date(end));
        }
        if (!(ev.count >= 0.0) || !std::isfinite(ev.count)) {
            throw DataError("case count must be a finite non-negative number");
        }
        const auto k = static_cast<std::size_t>(io::days_between(start, ev.date) / biweek_days);
        if (k >= out.n_biweeks) {
            out.dropped += ev.count;
            continue;
        }
        out.counts[static_cast<std::size_t>(it - unit_ids.begin())][k] += ev.count;
    }
    return out;
}

namespace {

std::vector<std::optional<double>> index_days(std::span<const DailyValue> series, Date start, std::size_t n_days,
                                              const char* what)
{
    std::vector<std::optional<double>> days(n_days);
    for (const auto& d : series) {
        const auto offset = io::days_between(start, d.date);
        if (offset < 0 || static_cast<std::size_t>(offset) >= n_days) {
            continue;
        }
        auto& slot = days[static_cast<std::size_t>(offset)];
        if (slot) {
            throw DataError(std::string("duplicate ") + what + " record for " + io::format_date(d.date));
        }
        slot = d.value;
    }
    return days;
}

} // namespace

std::vector<WeatherBin> bin_weather(std::span<const DailyValue> daily_temp, std::span<const DailyValue> daily_rain,
                                    Date start, Date end)
{
    const std::size_t n = biweek_count(start, end);
    const std::size_t n_days = n * biweek_days;
    const auto temp = index_days(daily_temp, start, n_days, "temperature");
    const auto rain = index_days(daily_rain, start, n_days, "precipitation");

    std::vector<WeatherBin> bins(n);
    for (std::size_t k = 0; k < n; ++k) {
        double sum = 0.0;
        int wet = 0;
        for (std::size_t d = k * biweek_days; d < (k + 1) * biweek_days; ++d) {
            const Date day = start + std::chrono::days(static_cast<int>(d));
            if (!temp[d]) {
                throw DataError("missing temperature for " + io::format_date(day));
            }
            if (!rain[d]) {
                throw DataError("missing precipitation for " + io::format_date(day));
            }
            sum += *temp[d];
            wet += *rain[d] > 0.0 ? 1 : 0;
        }
        bins[k] = {sum / biweek_days, wet};
    }
    return bins;
}

} // namespace landtsir::epi
