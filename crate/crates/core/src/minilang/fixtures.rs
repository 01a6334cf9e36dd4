//! Small programs shared by tests and examples.

/// The running example: a loop summing the positive entries of an array.
pub const SUM_POSITIVE: &str = "\
int SumPositive(int[] arr, int lim) {
    int sum = 0;
    for (int i = 0; i < lim; i++)
        if (arr[i] > 0) sum += arr[i];
    return sum;
}
";

/// `SUM_POSITIVE` with the loop removed; the loop is pasted back at line 3.
pub const SUM_POSITIVE_CONTEXT: &str = "\
int SumPositive(int[] arr, int lim) {
    int sum = 0;
    return sum;
}
";

/// The loop of `SUM_POSITIVE`, written with the original identifiers.
pub const SUM_POSITIVE_SNIPPET: &str = "for (int i = 0; i < lim; i++)
        if (arr[i] > 0) sum += arr[i];
";
