#include "moldqc/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "moldqc/common.hpp"

namespace moldqc {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size())
        throw std::invalid_argument("confusion: prediction and truth lengths differ");
    if (y_true.empty()) throw std::invalid_argument("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1))
            throw std::invalid_argument("confusion: labels must be 0 or 1");
        if (y_true[i] == 1)
            y_pred[i] == 1 ? ++cm.tp : ++cm.fn;
        else
            y_pred[i] == 1 ? ++cm.fp : ++cm.tn;
    }
    return cm;
}

Rates metrics(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw std::invalid_argument("metrics: empty confusion matrix");
    Rates r;
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    r.specificity = (cm.tn + cm.fp) > 0
                        ? static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp)
                        : kNaN;
    r.sensitivity = (cm.tp + cm.fn) > 0
                        ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn)
                        : kNaN;
    return r;
}

std::string format_pct(double fraction) {
    if (std::isnan(fraction)) return "nan";
    const long long tenths = std::llround(fraction * 1000.0);  // half away from zero
    std::string out = std::to_string(tenths / 10);
    out += '.';
    out += static_cast<char>('0' + std::llabs(tenths % 10));
    return out;
}

std::string render_report_table(std::span<const EvalReport> reports) {
    std::ostringstream os;
    os << "Approach                       Dataset   Accuracy[%]  Specificity[%]  Sensitivity[%]\n";
    for (const auto& r : reports) {
        os << r.approach;
        for (std::size_t i = r.approach.size(); i < 31; ++i) os << ' ';
        os << r.dataset;
        for (std::size_t i = r.dataset.size(); i < 10; ++i) os << ' ';
        std::string a = format_pct(r.rates.accuracy);
        std::string s = format_pct(r.rates.specificity);
        std::string t = format_pct(r.rates.sensitivity);
        os << a;
        for (std::size_t i = a.size(); i < 13; ++i) os << ' ';
        os << s;
        for (std::size_t i = s.size(); i < 16; ++i) os << ' ';
        os << t << '\n';
        os << "  confusion: tp=" << r.confusion.tp << " fp=" << r.confusion.fp
           << " fn=" << r.confusion.fn << " tn=" << r.confusion.tn << '\n';
    }
    return os.str();
}

}  // namespace moldqc
