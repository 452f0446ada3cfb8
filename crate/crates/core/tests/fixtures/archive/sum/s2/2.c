int main() {
    int a = 1;
    int b = 2;
    while (a) { }
    return a + b;
}
