#include "hjlab/report.hpp"

#include <cstdio>
#include <fstream>

namespace hjlab {

using nlohmann::json;

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

std::string summary_csv(const ResultBundle& b)
{
    std::string out = "name,invariant,measured,reference,tolerance,pass\n";
    for (const Check& c : b.checks)
        out += csv_field(c.name) + "," + csv_field(c.invariant) + "," + format_number(c.measured) + "," +
               format_number(c.reference) + "," + format_number(c.tolerance) + "," +
               (c.pass ? "1" : "0") + "\n";
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << content;
    out.close();
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

double read_number(const json& v)
{
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

const json& field(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end())
        throw DomainError(std::string("result bundle is missing '") + key + "'");
    return *it;
}

}  // namespace

ReportFormat report_format_from_string(std::string_view s)
{
    if (s == "csv")
        return ReportFormat::Csv;
    if (s == "json")
        return ReportFormat::Json;
    throw DomainError("unknown report format '" + std::string(s) + "' (expected csv or json)");
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string table_to_csv(const Table& table)
{
    std::string out;
    for (std::size_t k = 0; k < table.columns.size(); ++k)
        out += (k ? "," : "") + csv_field(table.columns[k]);
    out += "\n";
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < row.size(); ++k)
            out += (k ? "," : "") + format_number(row[k]);
        out += "\n";
    }
    return out;
}

json bundle_to_json(const ResultBundle& b)
{
    json tables = json::array();
    for (const Table& t : b.tables)
        tables.push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
    json checks = json::array();
    for (const Check& c : b.checks)
        checks.push_back({{"name", c.name},
                          {"invariant", c.invariant},
                          {"measured", c.measured},
                          {"reference", c.reference},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
    return {{"schema", b.schema},     {"experiment", b.experiment}, {"config", b.config},
            {"resolution", b.resolution}, {"tables", tables},       {"checks", checks},
            {"all_pass", b.all_pass()}};
}

ResultBundle bundle_from_json(const json& j)
{
    ResultBundle b;
    b.schema = field(j, "schema").get<std::string>();
    if (b.schema != kSchemaTag)
        throw DomainError("unsupported result schema '" + b.schema + "'");
    b.experiment = field(j, "experiment").get<std::string>();
    b.config = field(j, "config");
    b.resolution = field(j, "resolution");
    for (const json& t : field(j, "tables")) {
        Table table{field(t, "name").get<std::string>(), field(t, "columns").get<std::vector<std::string>>(), {}};
        for (const json& row : field(t, "rows")) {
            std::vector<double> r;
            for (const json& v : row)
                r.push_back(read_number(v));
            table.rows.push_back(std::move(r));
        }
        b.tables.push_back(std::move(table));
    }
    for (const json& c : field(j, "checks"))
        b.checks.push_back({field(c, "name").get<std::string>(), field(c, "invariant").get<std::string>(),
                            read_number(field(c, "measured")), read_number(field(c, "reference")),
                            read_number(field(c, "tolerance")), field(c, "pass").get<bool>()});
    return b;
}

std::vector<std::filesystem::path> emit_report(const ResultBundle& bundle,
                                               const std::filesystem::path& dir, ReportFormat format)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const std::string& content) {
        written.push_back(dir / name);
        write_file(written.back(), content);
    };
    if (format == ReportFormat::Json) {
        emit("bundle.json", bundle_to_json(bundle).dump(2) + "\n");
        return written;
    }
    for (const Table& t : bundle.tables)
        emit(t.name + ".csv", table_to_csv(t));
    emit("summary.csv", summary_csv(bundle));
    json head = {{"schema", bundle.schema},
                 {"experiment", bundle.experiment},
                 {"config", bundle.config},
                 {"resolution", bundle.resolution},
                 {"all_pass", bundle.all_pass()}};
    emit("bundle.json", head.dump(2) + "\n");
    return written;
}

}  // namespace hjlab
