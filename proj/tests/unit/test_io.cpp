#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lassodof/io.hpp"
#include "support.hpp"

using namespace lassodof;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir()
    {
        path_ = fs::temp_directory_path() /
                ("lassodof_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string write(const std::string& name, const std::string& body) const
    {
        std::ofstream(file(name)) << body;
        return file(name);
    }

private:
    fs::path path_;
};

} // namespace

TEST(Csv, MatrixRoundTripIsBitExact)
{
    TempDir dir;
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        DenseMatrix M = lassodof::testing::gaussian_matrix(1 + rep % 5, 1 + rep % 7, rng);
        M(0, 0) = rep % 2 ? 1e-300 : -123456789.123456789;
        write_csv_matrix(dir.file("m.csv"), M);
        EXPECT_EQ(read_csv_matrix(dir.file("m.csv")), M);
    }
}

TEST(Csv, VectorsAcceptColumnOrRow)
{
    TempDir dir;
    Vec v(3);
    v << 1.5, -2, 0.1;
    write_csv_vector(dir.file("col.csv"), v);
    EXPECT_EQ(read_csv_vector(dir.file("col.csv")), v);
    EXPECT_EQ(read_csv_vector(dir.write("row.csv", "1.5, -2 ,0.1\r\n\n")), v);
    EXPECT_THROW(read_csv_vector(dir.write("mat.csv", "1,2\n3,4\n")), InputError);
}

TEST(Csv, MalformedInputsAreInputErrors)
{
    TempDir dir;
    EXPECT_THROW(read_csv_matrix(dir.write("ragged.csv", "1,2\n3\n")), InputError);
    EXPECT_THROW(read_csv_matrix(dir.write("text.csv", "1,abc\n")), InputError);
    EXPECT_THROW(read_csv_matrix(dir.write("trail.csv", "1,2x\n")), InputError);
    EXPECT_THROW(read_csv_matrix(dir.write("emptycell.csv", "1,,2\n")), InputError);
    EXPECT_THROW(read_csv_matrix(dir.write("empty.csv", "")), InputError);
    EXPECT_THROW(read_csv_matrix(dir.write("nan.csv", "1,nan\n")), InputError);
    EXPECT_THROW(read_csv_matrix(dir.file("missing.csv")), InputError);
}

TEST(Csv, GraphEdges)
{
    TempDir dir;
    const GraphEdges g = read_graph_edges(dir.write("e.csv", "0,1\n2,1\n"), 3);
    EXPECT_EQ(g.edges.size(), 2u);
    EXPECT_EQ(graph_incidence(g), diff_1d(3));
    EXPECT_THROW(read_graph_edges(dir.write("bad.csv", "0,1.5\n"), 3), InputError);
    EXPECT_THROW(read_graph_edges(dir.write("range.csv", "0,3\n"), 3), InputError);
    EXPECT_THROW(read_graph_edges(dir.write("wide.csv", "0,1,2\n"), 3), InputError);
}

TEST(Json, SignedIndexSetRoundTrip)
{
    SignedIndexSet s;
    s.indices = {0, 4, 7};
    s.signs = {1, -1, 1};
    const nlohmann::json j = s;
    EXPECT_EQ(j.at("indices"), nlohmann::json({0, 4, 7}));
    EXPECT_FALSE(j.contains("degenerate"));
    EXPECT_EQ(nlohmann::json::parse(j.dump()).get<SignedIndexSet>(), s);

    SignedIndexSet d;
    d.indices = {0, 1};
    d.degenerate = true;
    EXPECT_EQ(nlohmann::json(d).get<SignedIndexSet>(), d);
}

TEST(Json, DfReportCarriesTolerances)
{
    SignedIndexSet s;
    s.indices = {1};
    s.signs = {-1};
    DfReport r;
    r.df_value = 1.0;
    r.estimator = DfEstimator::genlasso_active;
    r.set_used = s;
    r.set_tolerance = SetTolerance{2e-6, 1e-8};
    const nlohmann::json j = r;
    EXPECT_EQ(j.at("df"), 1.0);
    EXPECT_EQ(j.at("estimator"), "genlasso_active");
    EXPECT_EQ(j.at("tolerances").at("set").at("membership_tol"), 2e-6);
    EXPECT_EQ(j.at("tolerances").at("rank").at("mode"), "automatic");
    r.rank_tolerance = RankTolerance::relative(1e-9);
    EXPECT_EQ(nlohmann::json(r).at("tolerances").at("rank").at("relative_cutoff"), 1e-9);
}

TEST(Json, SolutionAndReplicationRecords)
{
    Solution s;
    s.beta = Vec::Ones(2);
    s.fit = Vec::Zero(3);
    s.gamma = Vec::Constant(2, 0.5);
    s.iterations = 7;
    const nlohmann::json j = s;
    EXPECT_EQ(j.at("beta").size(), 2u);
    EXPECT_EQ(j.at("diagnostics").at("iterations"), 7);
    EXPECT_FALSE(j.contains("intercept"));

    TempDir dir;
    std::vector<ReplicationRecord> recs(3);
    for (int r = 0; r < 3; ++r) {
        recs[r].replication = r;
        recs[r].df_term = 0.1 * r;
        recs[r].sure_value = -r;
    }
    recs[1].dropped = true;
    write_replication_csv(dir.file("r.csv"), recs);
    std::ifstream in(dir.file("r.csv"));
    std::string header, first, second, extra;
    std::getline(in, header);
    std::getline(in, first);
    std::getline(in, second);
    EXPECT_EQ(header, "replication,df_term,sure_value");
    EXPECT_EQ(first, "0,0,0");
    EXPECT_EQ(second.substr(0, 2), "2,");
    EXPECT_FALSE(std::getline(in, extra));
}
