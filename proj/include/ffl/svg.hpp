#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ffl::svg {

// Minimal vector line-chart writer for the --plot outputs.
class LinePlot {
public:
    LinePlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_series(std::string name, std::vector<double> xs, std::vector<double> ys);
    void write(std::ostream& os) const;
    void write_file(const std::string& path) const;

private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
    };
    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
};

}  // namespace ffl::svg
